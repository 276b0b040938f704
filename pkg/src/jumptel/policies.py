"""Optimal portfolio fractions and value functions for log and power utility.

Both utilities lead to per-regime first-order conditions in the constant
portfolio fraction, of the form

    drift - rate + intensity * E[f * weight(f; pi)] = 0

with weight 1/(1+pi*f) (log) or (1+pi*f)^{alpha-1} (power).  Each condition
is strictly decreasing in pi on the admissible interval, so the root is
unique when it exists; near an admissible boundary the expectation diverges,
which the solver treats as an infinite residual of the appropriate sign.

For power utility the drift coefficient drops out of the consumption-side
condition, so that condition alone pins the fraction: it is strictly convex
in pi with its minimum at pi = 0, giving zero, one (tangent) or two roots.
The solver finds the root(s) of the consumption condition first, then backs
out the drift each regime would need for the portfolio condition to hold as
well, and flags the market as inconsistent with joint optimality when the
configured drift differs from that value; the solution is still returned
with both residuals as diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .distributions import (
    DEFAULT_QUADRATURE,
    QuadratureSettings,
    TIGHT_QUADRATURE,
)
from .errors import ConfigError, DivergenceError, NoRootError, NumericalError
from .market import (
    LogOptimalConsumption,
    MarketParams,
    Policy,
    PowerOptimalConsumption,
)
from .paths import (
    RegimePath,
    consumption_profile,
    self_financing_profile,
    truncate,
)
from .solvers import RootResult, expand_bracket, find_root, newton_polish
from .telegraph import telegraph_exp_moment, telegraph_mean, telegraph_mean_integral
from .tilts import LogOptimalTilt, PowerOptimalTilt, state_price_profile

__all__ = [
    "log_drift_gap",
    "solve_log_fraction",
    "solve_log_fractions",
    "log_pair_value",
    "LogPolicySolution",
    "power_fraction_gap",
    "power_budget_gap",
    "power_combined_gap",
    "power_condition_residuals",
    "power_consistent_drift",
    "solve_power_fractions",
    "PowerPolicySolution",
    "power_terminal_value",
    "power_pair_value",
    "power_consumption",
]


# ----------------------------------------------------------------------
# Logarithmic utility
# ----------------------------------------------------------------------

def log_drift_gap(
    market: MarketParams,
    regime_index: int,
    pi: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """First-order condition for the log-optimal fraction in one regime."""
    reg = market.regimes[regime_index]
    tilted = reg.integrate_jump(lambda f: f / (1.0 + pi * f), settings)
    return reg.drift - reg.rate + reg.intensity * tilted


def _log_gap_slope(market, regime_index, pi, settings):
    reg = market.regimes[regime_index]
    return -reg.intensity * reg.integrate_jump(
        lambda f: (f / (1.0 + pi * f)) ** 2, settings
    )


def _guarded(gap_fn: Callable[[float], float]) -> Callable[[float], float]:
    """Map quadrature divergence near admissible boundaries to ±inf.

    The divergent direction is determined by the sign of the boundary being
    approached: the lower admissible endpoint is always negative (short
    positions against unbounded upward jumps) and sends the gap to +inf,
    the upper endpoint is positive and sends it to -inf.
    """

    def wrapped(pi: float) -> float:
        try:
            return gap_fn(pi)
        except DivergenceError:
            return -math.inf if pi > 0 else math.inf

    return wrapped


def _fraction_bracket_limits(market, regime_index, interval=None):
    """Search limits: the admissible interval (open ends nudged inward),
    intersected with a caller-supplied constraint interval if any."""
    admissible = market.regimes[regime_index].admissible_fractions()
    lo, hi = admissible.lo, admissible.hi
    if admissible.lo_open and math.isfinite(lo):
        lo = lo + 1e-12 * max(1.0, abs(lo))
    if admissible.hi_open and math.isfinite(hi):
        hi = hi - 1e-12 * max(1.0, abs(hi))
    if interval is not None:
        lo = max(lo, float(interval[0]))
        hi = min(hi, float(interval[1]))
        if not lo < hi:
            raise ConfigError(
                f"constraint interval for regime {regime_index} has empty "
                f"intersection with the admissible interval {admissible}",
                where=f"intervals[{regime_index}]",
            )
    return lo, hi


def _solve_regime_fraction(
    market: MarketParams,
    regime_index: int,
    gap_fn: Callable[[float], float],
    slope_fn: Callable[[float], float],
    what: str,
    limits: tuple[float, float],
) -> RootResult:
    guarded = _guarded(gap_fn)
    # Every admissible interval contains 0 (zero exposure never ruins), but
    # a caller-supplied constraint interval may not, so fall back to it
    # whenever the preferred initial window misses it.
    lo0 = max(-0.5, limits[0])
    hi0 = min(1.0, limits[1])
    if not lo0 < hi0:
        lo0, hi0 = limits
    try:
        lo, hi, f_lo, f_hi = expand_bracket(guarded, lo0, hi0, limits=limits)
    except NoRootError as exc:
        raise NoRootError(
            f"{what}: no admissible root in regime {regime_index} "
            f"(gap keeps one sign on the admissible interval)",
            lo=exc.lo, hi=exc.hi, g_lo=exc.g_lo, g_hi=exc.g_hi,
        ) from None
    result = find_root(guarded, lo, hi, f_lo, f_hi)
    try:
        root, residual = newton_polish(
            gap_fn, slope_fn, result.root, result.bracket
        )
    except DivergenceError:
        root, residual = result.root, result.residual
    return RootResult(root, residual, result.bracket, result.iterations)


@dataclass(frozen=True)
class LogPolicySolution:
    """Log-optimal fractions with solver diagnostics and the induced objects.

    ``value_intercepts`` holds the wealth-independent part of the objective:
    the value starting from regime i with wealth x is
    (horizon + 1) * ln(x) + value_intercepts[i].  Only filled for the
    two-regime alternating chain, where the closed form exists.
    """

    fractions: tuple[float, ...]
    residuals: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    value_intercepts: Optional[tuple[float, ...]] = None

    @property
    def tilt(self) -> LogOptimalTilt:
        return LogOptimalTilt(self.fractions)

    @property
    def policy(self) -> Policy:
        return Policy(self.fractions, consumption=LogOptimalConsumption())

    @property
    def terminal_only_policy(self) -> Policy:
        return Policy(self.fractions)


def solve_log_fraction(
    market: MarketParams,
    regime_index: int,
    interval: Optional[tuple[float, float]] = None,
    settings: QuadratureSettings = TIGHT_QUADRATURE,
) -> RootResult:
    """Log-optimal fraction for a single regime (the per-regime conditions
    are independent, so one regime can be solved even when another has no
    admissible root)."""
    if not 0 <= regime_index < market.n_regimes:
        raise ConfigError(
            f"regime index {regime_index} out of range", where="regime_index"
        )
    limits = _fraction_bracket_limits(market, regime_index, interval)
    return _solve_regime_fraction(
        market,
        regime_index,
        lambda pi: log_drift_gap(market, regime_index, pi, settings),
        lambda pi: _log_gap_slope(market, regime_index, pi, settings),
        "log-optimal fraction",
        limits,
    )


def solve_log_fractions(
    market: MarketParams,
    intervals: Optional[Sequence[tuple[float, float]]] = None,
    settings: QuadratureSettings = TIGHT_QUADRATURE,
) -> LogPolicySolution:
    """Solve the log-optimal first-order condition in every regime.

    ``intervals`` optionally constrains the per-regime search (always
    intersected with the admissible interval).
    """
    if intervals is not None and len(intervals) != market.n_regimes:
        raise ConfigError(
            f"{len(intervals)} constraint intervals for "
            f"{market.n_regimes} regimes",
            where="intervals",
        )
    roots = [
        solve_log_fraction(
            market, i, None if intervals is None else intervals[i], settings
        )
        for i in range(market.n_regimes)
    ]
    fractions = tuple(r.root for r in roots)
    intercepts = None
    if market.alternating_two_regime:
        intercepts = tuple(
            log_pair_value(market, 1.0, i, fractions, settings)
            for i in range(2)
        )
    return LogPolicySolution(
        fractions=fractions,
        residuals=tuple(r.residual for r in roots),
        brackets=tuple(r.bracket for r in roots),
        value_intercepts=intercepts,
    )


def log_pair_value(
    market: MarketParams,
    x0: float,
    start_regime: int,
    fractions: tuple[float, ...],
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Expected log objective E[∫ ln c dt + ln V_T] for constant fractions
    paired with the proportional consumption rule c = V0/(T+1).

    Valid for any admissible constant fractions (two alternating regimes);
    maximized over fractions exactly at the log-optimal ones.  The wealth
    log is a telegraph whose mean integrates in closed form.
    """
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    market.require_alternating("log pair value")
    T = market.horizon
    tendencies = []
    jump_means = []
    for pi, reg in zip(fractions, market.regimes):
        tendencies.append(pi * reg.drift + (1.0 - pi) * reg.rate)
        jump_means.append(
            reg.integrate_jump(lambda f: math.log1p(pi * f), settings)
        )
    mean_terminal = telegraph_mean(
        market, T, start_regime, tendencies=tendencies,
        jump_means=jump_means, settings=settings,
    )
    mean_running = telegraph_mean_integral(
        market, T, start_regime, tendencies=tendencies,
        jump_means=jump_means, settings=settings,
    )
    return (T + 1.0) * (math.log(x0) - math.log(T + 1.0)) + mean_running + mean_terminal


# ----------------------------------------------------------------------
# Fractional-power utility
# ----------------------------------------------------------------------

def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise ConfigError("alpha must lie in (0, 1)", where="alpha")
    return float(alpha)


def power_fraction_gap(
    market: MarketParams,
    regime_index: int,
    pi: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """First-order condition in the fraction for power utility."""
    alpha = _check_alpha(alpha)
    reg = market.regimes[regime_index]
    tilted = reg.integrate_jump(
        lambda f: f * (1.0 + pi * f) ** (alpha - 1.0), settings
    )
    return reg.drift - reg.rate + reg.intensity * tilted


def _power_gap_slope(market, regime_index, pi, alpha, settings):
    reg = market.regimes[regime_index]
    return (alpha - 1.0) * reg.intensity * reg.integrate_jump(
        lambda f: f * f * (1.0 + pi * f) ** (alpha - 2.0), settings
    )


def power_budget_gap(
    market: MarketParams,
    regime_index: int,
    pi: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Consumption-side condition for power utility in one regime.

    Zero requires E[(1+pi f)^alpha - q (1+pi f)^{alpha-1}] to equal
    1 + q (rate - intensity)/intensity with q = alpha/(alpha-1) < 0.  The
    left side is strictly convex in pi with minimum 1 - q > 0 at pi = 0,
    and the right side equals 1 - q exactly when rate = 0, so the condition
    is solvable only for rate <= 0: the tangent root pi = 0 at a zero rate,
    one root on each side of 0 for a negative one.  The drift never enters,
    which is what lets the solver treat this as the primary equation and
    back the consistent drift out afterwards.
    """
    alpha = _check_alpha(alpha)
    q = alpha / (alpha - 1.0)
    reg = market.regimes[regime_index]
    lhs = reg.integrate_jump(
        lambda f: (1.0 + pi * f) ** alpha - q * (1.0 + pi * f) ** (alpha - 1.0),
        settings,
    )
    rhs = 1.0 + q * (reg.rate - reg.intensity) / reg.intensity
    return lhs - rhs


def _power_budget_slope(market, regime_index, pi, alpha, settings):
    # d/dpi of the budget condition: alpha * pi * E[f^2 (1+pi f)^(alpha-2)].
    reg = market.regimes[regime_index]
    return alpha * pi * reg.integrate_jump(
        lambda f: f * f * (1.0 + pi * f) ** (alpha - 2.0), settings
    )


def power_combined_gap(
    market: MarketParams,
    regime_index: int,
    pi: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Combined form of the two power-utility conditions in one regime:
    E[(1+pi f)^{alpha-1}] minus its affine expression in the market
    coefficients.  When the fraction condition holds at pi this equals
    (1 - alpha) times the budget gap, so the two vanish together.
    """
    alpha = _check_alpha(alpha)
    reg = market.regimes[regime_index]
    h = reg.integrate_jump(lambda f: (1.0 + pi * f) ** (alpha - 1.0), settings)
    affine = (
        (reg.intensity - alpha * reg.rate)
        + (1.0 - alpha) * pi * (reg.drift - reg.rate)
    ) / reg.intensity
    return h - affine


def power_consistent_drift(
    market: MarketParams,
    regime_index: int,
    pi: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Drift making the portfolio condition hold at the given fraction:
    rate - intensity * E[f (1+pi f)^{alpha-1}].  The portfolio-condition
    residual at any configured drift is drift minus this value.
    """
    alpha = _check_alpha(alpha)
    reg = market.regimes[regime_index]
    tilted = reg.integrate_jump(
        lambda f: f * (1.0 + pi * f) ** (alpha - 1.0), settings
    )
    return reg.rate - reg.intensity * tilted


def power_condition_residuals(
    market: MarketParams,
    regime_index: int,
    pi: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[float, float]:
    """Residuals of (portfolio condition, consumption condition) at pi."""
    return (
        power_fraction_gap(market, regime_index, pi, alpha, settings),
        power_budget_gap(market, regime_index, pi, alpha, settings),
    )


# Budget gaps this close to zero at pi = 0 are treated as the tangent case:
# the true roots, if any, are within solver tolerance of 0 anyway.
_TANGENT_TOL = 1e-12


def _guarded_for_budget(gap_fn):
    """Divergence near either admissible boundary sends the budget gap to
    +inf (the (1+pi f)^{alpha-1} term blows up with a positive weight)."""

    def wrapped(pi: float) -> float:
        try:
            return gap_fn(pi)
        except DivergenceError:
            return math.inf

    return wrapped


def _power_branch_root(
    market, regime_index, alpha, branch, settings
) -> Optional[RootResult]:
    """Root of the budget condition on one monotone branch, or None if the
    gap keeps one sign there."""
    gap = lambda pi: power_budget_gap(market, regime_index, pi, alpha, settings)
    slope = lambda pi: _power_budget_slope(market, regime_index, pi, alpha, settings)
    guarded = _guarded_for_budget(gap)
    lo, hi = branch
    lo0 = lo if math.isfinite(lo) else min(-1.0, hi - 1.0)
    hi0 = hi if math.isfinite(hi) else max(1.0, lo + 1.0)
    try:
        lo2, hi2, f_lo, f_hi = expand_bracket(guarded, lo0, hi0, limits=branch)
    except NoRootError:
        return None
    result = find_root(guarded, lo2, hi2, f_lo, f_hi)
    try:
        root, residual = newton_polish(gap, slope, result.root, result.bracket)
    except DivergenceError:
        root, residual = result.root, result.residual
    return RootResult(root, residual, result.bracket, result.iterations)


@dataclass(frozen=True)
class PowerPolicySolution:
    """Power-optimal fractions plus drift-consistency diagnostics.

    ``fractions`` solve the consumption-side condition; ``consistent_drifts``
    is the drift each regime would need for the portfolio condition to hold
    at that fraction, and ``drift_residuals`` the configured drift minus it.
    ``value_tendencies`` and ``value_jump_means`` are the per-regime slope
    and expected jump factor of wealth^alpha at the solution, the inputs the
    closed-form value delegates to the exponential-moment formula.
    """

    alpha: float
    fractions: tuple[float, ...]
    budget_residuals: tuple[float, ...]
    brackets: tuple[tuple[float, float], ...]
    consistent_drifts: tuple[float, ...]
    drift_residuals: tuple[float, ...]
    value_tendencies: tuple[float, ...]
    value_jump_means: tuple[float, ...]

    @property
    def consistent(self) -> bool:
        """Whether every configured drift matches joint optimality to 1e-8."""
        return all(abs(d) <= 1e-8 for d in self.drift_residuals)

    @property
    def tilt(self) -> PowerOptimalTilt:
        return PowerOptimalTilt(self.fractions, self.alpha)

    @property
    def policy(self) -> Policy:
        return Policy(
            self.fractions, consumption=PowerOptimalConsumption(self.alpha)
        )

    @property
    def terminal_only_policy(self) -> Policy:
        return Policy(self.fractions)


def solve_power_fractions(
    market: MarketParams,
    alpha: float,
    intervals: Optional[Sequence[tuple[float, float]]] = None,
    settings: QuadratureSettings = TIGHT_QUADRATURE,
) -> PowerPolicySolution:
    """Solve the power-utility consumption condition per regime, then back
    out the drift the portfolio condition would require.

    The condition is convex with its minimum at zero exposure, so for a
    negative riskless rate there is one root on each side of 0.  When the
    search interval (admissible interval intersected with the optional
    per-regime constraint) contains both, the root whose consistent drift
    is closer to the configured drift is returned; constrain the interval
    to force a particular side.  A zero rate is the tangent case and
    returns 0.  A positive rate leaves the gap positive everywhere and
    raises NoRootError: deferring consumption then beats the utility clock,
    so no constant fraction can equalize the two.
    """
    alpha = _check_alpha(alpha)
    if intervals is not None and len(intervals) != market.n_regimes:
        raise ConfigError(
            f"{len(intervals)} constraint intervals for "
            f"{market.n_regimes} regimes",
            where="intervals",
        )
    picked: list[RootResult] = []
    for i in range(market.n_regimes):
        reg = market.regimes[i]
        limits = _fraction_bracket_limits(
            market, i, None if intervals is None else intervals[i]
        )
        lo, hi = limits
        candidates: list[RootResult] = []
        if lo < 0.0 < hi:
            gap0 = power_budget_gap(market, i, 0.0, alpha, settings)
            if abs(gap0) <= _TANGENT_TOL:
                candidates.append(RootResult(0.0, gap0, (0.0, 0.0), 0))
            elif gap0 > 0.0:
                raise NoRootError(
                    f"consumption condition unsolvable in regime {i}: the "
                    f"gap at zero exposure is {gap0:.6g} > 0, meaning the "
                    f"riskless rate {reg.rate:g} is above the solvable "
                    f"range (rate <= 0, with the tangent root 0 at rate 0)",
                    lo=0.0, hi=0.0, g_lo=gap0, g_hi=gap0,
                )
            else:
                for branch in ((lo, 0.0), (0.0, hi)):
                    res = _power_branch_root(market, i, alpha, branch, settings)
                    if res is not None:
                        candidates.append(res)
        else:
            res = _power_branch_root(market, i, alpha, limits, settings)
            if res is not None:
                candidates.append(res)
        if not candidates:
            raise NoRootError(
                f"no sign change of the consumption condition in regime {i} "
                f"within [{lo:g}, {hi:g}]",
                lo=lo, hi=hi, g_lo=math.nan, g_hi=math.nan,
            )
        if len(candidates) > 1:
            scores = [
                abs(reg.drift - power_consistent_drift(
                    market, i, c.root, alpha, settings))
                for c in candidates
            ]
            best = min(range(len(candidates)), key=lambda k: (scores[k], k))
            candidates = [candidates[best]]
        picked.append(candidates[0])

    fractions = tuple(r.root for r in picked)
    consistent_drifts = tuple(
        power_consistent_drift(market, i, fractions[i], alpha, settings)
        for i in range(market.n_regimes)
    )
    drift_residuals = tuple(
        market.regimes[i].drift - consistent_drifts[i]
        for i in range(market.n_regimes)
    )
    value_tendencies = tuple(
        alpha * (pi * reg.drift + (1.0 - pi) * reg.rate)
        for pi, reg in zip(fractions, market.regimes)
    )
    value_jump_means = tuple(
        reg.integrate_jump(lambda f, pi=pi: (1.0 + pi * f) ** alpha, settings)
        for pi, reg in zip(fractions, market.regimes)
    )
    return PowerPolicySolution(
        alpha=alpha,
        fractions=fractions,
        budget_residuals=tuple(r.residual for r in picked),
        brackets=tuple(r.bracket for r in picked),
        consistent_drifts=consistent_drifts,
        drift_residuals=drift_residuals,
        value_tendencies=value_tendencies,
        value_jump_means=value_jump_means,
    )


def power_terminal_value(
    market: MarketParams,
    x0: float,
    alpha: float,
    fractions: tuple[float, ...],
    start_regime: int,
    t: Optional[float] = None,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[V_t^alpha / alpha] for self-financing wealth with constant fractions.

    V^alpha is the exponential of a telegraph with tendencies
    alpha * (pi*drift + (1-pi)*rate) and jump factors (1 + pi f)^alpha, so
    the closed-form exponential moment applies for any admissible fractions.
    """
    alpha = _check_alpha(alpha)
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    market.require_alternating("power terminal value")
    horizon = market.horizon if t is None else t
    tendencies = []
    tilted_means = []
    for pi, reg in zip(fractions, market.regimes):
        tendencies.append(alpha * (pi * reg.drift + (1.0 - pi) * reg.rate))
        tilted_means.append(
            reg.integrate_jump(lambda f: (1.0 + pi * f) ** alpha, settings)
        )
    moment = telegraph_exp_moment(
        market, horizon, start_regime,
        tendencies=tendencies, exp_jump_means=tilted_means, settings=settings,
    )
    return x0 ** alpha / alpha * moment


def power_pair_value(
    market: MarketParams,
    x0: float,
    alpha: float,
    horizon: Optional[float] = None,
) -> float:
    """Optimal consumption-inclusive power objective x^alpha (T+1)^{1-alpha}/alpha.

    Regime-independent; valid when the market satisfies both power-utility
    conditions (fraction and consumption) in every regime.  ``horizon``
    overrides the market horizon (the structure is time-homogeneous, so this
    is the value over any remaining horizon; 0 gives x^alpha/alpha).
    """
    alpha = _check_alpha(alpha)
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    T = market.horizon if horizon is None else float(horizon)
    if T < 0:
        raise ConfigError("horizon must be >= 0", where="horizon")
    return x0 ** alpha * (T + 1.0) ** (1.0 - alpha) / alpha


def power_consumption(
    market: MarketParams,
    solution: PowerPolicySolution,
    path: RegimePath,
    t: float,
    x0: float,
    cross_check: bool = True,
    tolerance: float = 1e-9,
) -> float:
    """Optimal consumption rate at time t on one realized path.

    Evaluated directly — x0/(horizon+1) times a deterministic per-regime
    exponential decay between events and one realized factor 1 + pi*f per
    event — and, when ``cross_check`` is set, recomputed from the
    state-price density as x0/(horizon+1) * H_t^{1/(alpha-1)}.  The two
    agree exactly when the consumption condition holds at the fractions, so
    a relative mismatch above ``tolerance`` raises NumericalError.
    """
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    t = float(t)
    if not (0.0 <= t <= path.t_end):
        raise ConfigError(
            f"evaluation time outside [0, {path.t_end:g}]", where="t"
        )
    part = truncate(path, t)
    policy = solution.policy
    v1 = self_financing_profile(market, policy, part)
    c_prof = consumption_profile(market, policy, part, x0, v1=v1)
    direct = c_prof.terminal_value()
    if cross_check:
        h_level = state_price_profile(market, solution.tilt, part).terminal_level()
        other = (
            x0 / (market.horizon + 1.0)
            * math.exp(h_level / (solution.alpha - 1.0))
        )
        scale = max(abs(direct), abs(other))
        if abs(direct - other) > tolerance * scale:
            raise NumericalError(
                f"consumption forms disagree at t={t:g}: direct {direct!r} "
                f"vs state-price {other!r}; the solution's fractions do not "
                "satisfy the consumption condition to working precision"
            )
    return direct
