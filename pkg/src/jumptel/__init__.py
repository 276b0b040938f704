"""Regime-switching pure-jump market toolkit.

Exact simulation of piecewise-linear telegraph processes with jumps, the
prices and wealth processes built on them, closed-form moments, martingale
change-of-measure machinery, and optimal portfolio/consumption solvers for
logarithmic and fractional-power utility — plus an HTTP service and a CLI
wrapping it all.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DivergenceError,
    JumptelError,
    ModelViolationError,
    NoRootError,
    NumericalError,
    QuadratureError,
    ReproducibilityError,
    RuinError,
)
from .distributions import (
    DEFAULT_QUADRATURE,
    IDENTITY_MAP,
    TIGHT_QUADRATURE,
    Discrete,
    JumpMap,
    MarkDistribution,
    NegativePower,
    PointMass,
    PositivePower,
    QuadratureSettings,
    register_jump_map,
)
from .market import (
    AdmissibleInterval,
    ConstantRate,
    ConsumptionRule,
    LogOptimalConsumption,
    MarketParams,
    NoConsumption,
    Policy,
    PowerOptimalConsumption,
    RegimeSpec,
    validate_policy,
)
from .paths import (
    PathSample,
    RegimePath,
    count_marks,
    log_price_profile,
    price_value,
    sample_path_values,
    simulate_regime_path,
    telegraph_value,
    wealth_no_consumption,
    wealth_with_consumption,
)
from .telegraph import (
    compensated_martingale_mean,
    expected_mark_count,
    expected_occupation,
    telegraph_exp_moment,
    telegraph_mean,
)
from .tilts import (
    CustomTilt,
    LogOptimalTilt,
    PowerOptimalTilt,
    UnitTilt,
    budget_gap,
    density_profile,
    expected_density_terminal,
    state_price_profile,
)
from .policies import (
    LogPolicySolution,
    PowerPolicySolution,
    log_drift_gap,
    log_pair_value,
    power_budget_gap,
    power_combined_gap,
    power_consistent_drift,
    power_consumption,
    power_fraction_gap,
    power_pair_value,
    power_terminal_value,
    solve_log_fraction,
    solve_log_fractions,
    solve_power_fractions,
)
from .mc import (
    BudgetGapFn,
    CompensatorResidualFn,
    CountFn,
    DensityTerminalFn,
    Estimate,
    ExpMomentFn,
    LogUtilityFn,
    McJob,
    PowerUtilityFn,
    PriceTerminalFn,
    StatePriceMomentFn,
    TelegraphMeanFn,
    reproduce,
    run,
)
from .config import (
    EXAMPLE_CONFIG,
    RunConfig,
    config_schema,
    load_config,
    loads_config,
    parse_config,
)
from .verify import CheckResult, SuiteReport, run_suite
from .client import ServiceClient, ServiceError
from .service import create_app

__all__ = [
    "__version__",
    # errors
    "JumptelError", "ConfigError", "NumericalError", "QuadratureError",
    "DivergenceError", "NoRootError", "ModelViolationError", "RuinError",
    "ReproducibilityError",
    # jump size distributions
    "MarkDistribution", "NegativePower", "PositivePower", "PointMass",
    "Discrete", "JumpMap", "IDENTITY_MAP", "register_jump_map",
    "QuadratureSettings", "DEFAULT_QUADRATURE", "TIGHT_QUADRATURE",
    # market description
    "RegimeSpec", "MarketParams", "Policy", "AdmissibleInterval",
    "ConsumptionRule", "NoConsumption", "ConstantRate",
    "LogOptimalConsumption", "PowerOptimalConsumption", "validate_policy",
    # path simulation
    "RegimePath", "simulate_regime_path", "PathSample", "sample_path_values",
    "telegraph_value", "price_value", "wealth_no_consumption",
    "wealth_with_consumption", "log_price_profile", "count_marks",
    # closed-form moments
    "telegraph_mean", "telegraph_exp_moment", "compensated_martingale_mean",
    "expected_occupation", "expected_mark_count",
    # change of measure
    "UnitTilt", "LogOptimalTilt", "PowerOptimalTilt", "CustomTilt",
    "density_profile", "state_price_profile", "expected_density_terminal",
    "budget_gap",
    # optimal policies
    "LogPolicySolution", "PowerPolicySolution", "log_drift_gap",
    "solve_log_fraction", "solve_log_fractions", "log_pair_value",
    "power_fraction_gap", "power_budget_gap", "power_combined_gap",
    "power_consistent_drift", "power_terminal_value", "power_pair_value",
    "power_consumption", "solve_power_fractions",
    # Monte Carlo
    "McJob", "Estimate", "run", "reproduce", "TelegraphMeanFn",
    "ExpMomentFn", "PriceTerminalFn", "CountFn", "DensityTerminalFn",
    "StatePriceMomentFn", "BudgetGapFn", "LogUtilityFn", "PowerUtilityFn",
    "CompensatorResidualFn",
    # config
    "RunConfig", "parse_config", "loads_config", "load_config",
    "config_schema", "EXAMPLE_CONFIG",
    # verification
    "CheckResult", "SuiteReport", "run_suite",
    # service + client
    "create_app", "ServiceClient", "ServiceError",
]
