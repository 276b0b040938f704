"""Self-verification suites: closed forms cross-checked against Monte Carlo.

Four suites, each a list of named checks.  Statistical checks compare a
closed-form reference with an MC estimate under the 4-standard-error rule;
deterministic checks (pathwise identities, exact shifts) use absolute
tolerances.  The CLI and service render the rows and map an overall failure
to their own error channels.

* ``moments``    -- telegraph mean and price/exponential moments.
* ``martingale`` -- compensated-jump mean, density terminal values,
                    compensator residuals.
* ``budget``     -- pathwise budget identity for the optimal pair; MC budget
                    slack for a deliberately suboptimal pair.
* ``value``      -- closed-form objective values vs MC utility estimates,
                    plus exact wealth-scaling identities.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .config import RunConfig
from .distributions import TIGHT_QUADRATURE
from .errors import ConfigError, DivergenceError
from .market import Policy, cached_mean_jump
from .mc import (
    BudgetGapFn,
    CompensatorResidualFn,
    DensityTerminalFn,
    Estimate,
    ExpMomentFn,
    LogUtilityFn,
    McJob,
    PowerUtilityFn,
    PriceTerminalFn,
    StatePriceMomentFn,
    TelegraphMeanFn,
    _path_rng,
    run,
)
from .paths import simulate_regime_path
from .policies import (
    LogPolicySolution,
    PowerPolicySolution,
    log_pair_value,
    power_pair_value,
    power_terminal_value,
    solve_log_fractions,
    solve_power_fractions,
)
from .telegraph import compensated_martingale_mean, telegraph_exp_moment, telegraph_mean
from .tilts import LogOptimalTilt, PowerOptimalTilt
from .tilts import budget_gap as pathwise_budget_gap

__all__ = ["CheckResult", "SuiteReport", "SUITES", "run_suite"]

SUITES = ("moments", "martingale", "budget", "value")

# Pathwise identities cancel the same cached quadrature values on both
# sides, so the residual is pure floating-point accumulation.
_PATHWISE_TOL = 1e-12
_SE_RULE = 4.0
_N_PATHWISE = 200


@dataclass(frozen=True)
class CheckResult:
    """One verification row.

    ``measure`` selects the pass rule:
      * ``se``    -- |estimate - reference| <= tolerance * stderr
      * ``abs``   -- |estimate - reference| <= tolerance
      * ``below`` -- estimate + tolerance * stderr < reference
    """

    suite: str
    name: str
    reference: float
    estimate: float
    stderr: float
    tolerance: float
    measure: str
    passed: bool
    elapsed_seconds: float
    note: str = ""

    @property
    def se_multiples(self) -> float:
        """Distance from the reference in standard errors (inf if exact-rule)."""
        if self.stderr > 0.0:
            return (self.estimate - self.reference) / self.stderr
        return 0.0 if self.estimate == self.reference else math.inf


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    checks: tuple[CheckResult, ...]
    elapsed_seconds: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def n_failed(self) -> int:
        return sum(not c.passed for c in self.checks)


def _se_check(suite: str, name: str, reference: float, est: Estimate,
              note: str = "") -> CheckResult:
    ok = abs(est.mean - reference) <= _SE_RULE * est.stderr
    return CheckResult(
        suite=suite, name=name, reference=reference, estimate=est.mean,
        stderr=est.stderr, tolerance=_SE_RULE, measure="se", passed=ok,
        elapsed_seconds=est.elapsed_seconds, note=note,
    )


def _below_check(suite: str, name: str, reference: float, est: Estimate,
                 note: str = "") -> CheckResult:
    ok = est.mean + _SE_RULE * est.stderr < reference
    return CheckResult(
        suite=suite, name=name, reference=reference, estimate=est.mean,
        stderr=est.stderr, tolerance=_SE_RULE, measure="below", passed=ok,
        elapsed_seconds=est.elapsed_seconds, note=note,
    )


def _abs_check(suite: str, name: str, reference: float, value: float,
               tolerance: float, elapsed: float = 0.0, note: str = "") -> CheckResult:
    ok = abs(value - reference) <= tolerance
    return CheckResult(
        suite=suite, name=name, reference=reference, estimate=value,
        stderr=0.0, tolerance=tolerance, measure="abs", passed=ok,
        elapsed_seconds=elapsed, note=note,
    )


def _mc(cfg: RunConfig, functional, *, start_regime: int = 0,
        t_end: Optional[float] = None) -> Estimate:
    job = McJob(
        market=cfg.market,
        functional=functional,
        n_paths=cfg.mc.n_paths,
        seed=cfg.mc.seed,
        start_regime=start_regime,
        t_end=t_end,
        workers=cfg.mc.workers,
    )
    return run(job)


# ----------------------------------------------------------------------
# Suites
# ----------------------------------------------------------------------

def _suite_moments(cfg: RunConfig) -> list[CheckResult]:
    market = cfg.market
    market.require_alternating("the moments suite (closed-form references)")
    T = market.horizon
    rows: list[CheckResult] = []
    for start in range(market.n_regimes):
        for t in (0.5 * T, T):
            ref = telegraph_mean(market, t, start, settings=TIGHT_QUADRATURE)
            est = _mc(cfg, TelegraphMeanFn(), start_regime=start, t_end=t)
            rows.append(_se_check(
                "moments", f"mean[t={t:g}, start={start}]", ref, est))
    mean_factors = tuple(
        1.0 + cached_mean_jump(reg, TIGHT_QUADRATURE) for reg in market.regimes
    )
    for start in range(market.n_regimes):
        ref = market.s0 * telegraph_exp_moment(
            market, T, start, exp_jump_means=mean_factors,
            settings=TIGHT_QUADRATURE,
        )
        est = _mc(cfg, PriceTerminalFn(), start_regime=start)
        rows.append(_se_check(
            "moments", f"price_mean[t={T:g}, start={start}]", ref, est))
    # Raw exponential moment: only when E[e^f] is finite in every regime
    # (heavy right tails make it diverge, which is a property of the market,
    # not a failure).
    try:
        for start in range(market.n_regimes):
            ref = telegraph_exp_moment(market, T, start, settings=TIGHT_QUADRATURE)
            est = _mc(cfg, ExpMomentFn(), start_regime=start)
            rows.append(_se_check(
                "moments", f"exp_moment[t={T:g}, start={start}]", ref, est))
    except DivergenceError:
        pass
    return rows


def _solve_for(cfg: RunConfig):
    """Solve the configured utility's optimality system."""
    if cfg.utility.kind == "log":
        return solve_log_fractions(cfg.market, intervals=cfg.intervals)
    return solve_power_fractions(
        cfg.market, cfg.utility.alpha, intervals=cfg.intervals
    )


def _suite_martingale(cfg: RunConfig) -> list[CheckResult]:
    market = cfg.market
    rows: list[CheckResult] = []
    if market.alternating_two_regime:
        for start in range(market.n_regimes):
            ref = compensated_martingale_mean(
                market, market.horizon, start, settings=TIGHT_QUADRATURE
            )
            comp = tuple(
                -reg.intensity * cached_mean_jump(reg, TIGHT_QUADRATURE)
                for reg in market.regimes
            )
            est = _mc(cfg, TelegraphMeanFn(tendencies=comp), start_regime=start)
            rows.append(_se_check(
                "martingale", f"compensated_mean[start={start}]", ref, est))
    solution = _solve_for(cfg)
    tilt = solution.tilt
    for start in range(market.n_regimes):
        est = _mc(cfg, DensityTerminalFn(tilt), start_regime=start)
        rows.append(_se_check(
            "martingale", f"density_terminal[{tilt.kind}, start={start}]",
            1.0, est))
    if isinstance(solution, PowerPolicySolution):
        expo = solution.alpha / (solution.alpha - 1.0)
        est = _mc(cfg, StatePriceMomentFn(tilt, exponent=expo))
        rows.append(_se_check(
            "martingale", f"state_price_moment[exponent={expo:g}]", 1.0, est))
    for interval, label in ((None, "all marks"), ((-0.5, 0.5), "(-0.5, 0.5]")):
        est = _mc(cfg, CompensatorResidualFn(interval=interval))
        rows.append(_se_check(
            "martingale", f"compensator_residual[{label}]", 0.0, est))
    return rows


def _outward_fractions(cfg: RunConfig,
                       fractions: tuple[float, ...]) -> Optional[tuple[float, ...]]:
    """Perturb each fraction 0.1 away from zero, staying admissible.

    Moving outward keeps sign(pi) while flipping the sign of the optimality
    gap at pi, so the perturbed pair's own pricing tilt has a strictly
    negative wealth drift — the direction in which budget slack is provably
    negative, not just nonzero.  A regime pinned at an admissible endpoint
    is left at its root (zero contribution); None if every regime is pinned.
    """
    out = []
    moved = False
    for i, pi in enumerate(fractions):
        adm = cfg.market.regimes[i].admissible_fractions()
        target = pi + 0.1 if pi >= 0.0 else pi - 0.1
        if adm.lo + 1e-9 < target < adm.hi - 1e-9:
            out.append(target)
            moved = True
            continue
        edge = adm.hi if pi >= 0.0 else adm.lo
        half = 0.5 * (pi + edge) if math.isfinite(edge) else target
        if abs(half - pi) > 1e-6 and adm.lo + 1e-9 < half < adm.hi - 1e-9:
            out.append(half)
            moved = True
        else:
            out.append(pi)
    return tuple(out) if moved else None


def _suite_budget(cfg: RunConfig) -> list[CheckResult]:
    market = cfg.market
    solution = _solve_for(cfg)
    policy = solution.policy
    tilt = solution.tilt
    is_log = isinstance(solution, LogPolicySolution)
    rows: list[CheckResult] = []

    if is_log:
        # The log-optimal pair satisfies the budget identity path by path
        # (the pricing density is the reciprocal of the unit optimal wealth),
        # so both checks here are absolute, not statistical.
        t0 = time.perf_counter()
        worst = 0.0
        n_pathwise = min(_N_PATHWISE, cfg.mc.n_paths)
        for k in range(n_pathwise):
            rng = _path_rng(cfg.mc.seed, k)
            path = simulate_regime_path(market, rng, start_regime=0)
            gap = pathwise_budget_gap(market, policy, tilt, path, cfg.x0)
            worst = max(worst, abs(gap))
        rows.append(_abs_check(
            "budget", f"pathwise_gap_max[{n_pathwise} paths]", 0.0, worst,
            _PATHWISE_TOL, elapsed=time.perf_counter() - t0,
            note="max |H_T V_T + ∫ H c dt - x0| over sampled paths",
        ))
        est = _mc(cfg, BudgetGapFn(policy=policy, tilt=tilt, x0=cfg.x0))
        rows.append(_abs_check(
            "budget", "mean_gap[optimal pair]", 0.0, est.mean,
            _PATHWISE_TOL, elapsed=est.elapsed_seconds,
            note="pathwise identity: the mean is pure rounding noise",
        ))
    elif solution.consistent:
        # Power budget holds in expectation only (the tilted wealth is a
        # genuine martingale, not a pathwise constant).
        est = _mc(cfg, BudgetGapFn(policy=policy, tilt=tilt, x0=cfg.x0))
        rows.append(_se_check("budget", "mean_gap[optimal pair]", 0.0, est))
    else:
        rows.append(_abs_check(
            "budget", "mean_gap[skipped]", 0.0, 0.0, 1.0,
            note="configured drifts are not jointly optimal, so the "
                 "zero-mean budget reference does not apply",
        ))

    # Suboptimal arm: price the perturbed pair under its *own* tilt. The
    # perturbed drift condition no longer holds, the tilted wealth becomes a
    # strict supermartingale, and the mean gap must come out negative.
    sub = _outward_fractions(cfg, solution.fractions)
    if sub is None or (not is_log and not solution.consistent):
        rows.append(_abs_check(
            "budget", "mean_gap[suboptimal skipped]", 0.0, 0.0, 1.0,
            note="no admissible outward perturbation with a guaranteed "
                 "negative-slack direction",
        ))
        return rows
    if is_log:
        sub_policy = Policy(sub, consumption=policy.consumption)
        sub_tilt = LogOptimalTilt(sub)
    else:
        sub_policy = Policy(sub)  # consumption-free pair: no ruin risk
        sub_tilt = PowerOptimalTilt(sub, solution.alpha)
    est = _mc(cfg, BudgetGapFn(policy=sub_policy, tilt=sub_tilt, x0=cfg.x0))
    rows.append(_below_check(
        "budget", "mean_gap[suboptimal pair]", 0.0, est,
        note=f"fractions perturbed outward to "
             f"{tuple(round(s, 6) for s in sub)}, priced under their own tilt",
    ))
    return rows


def _suite_value(cfg: RunConfig) -> list[CheckResult]:
    market = cfg.market
    market.require_alternating("the value suite (closed-form references)")
    solution = _solve_for(cfg)
    x0 = cfg.x0
    rows: list[CheckResult] = []

    if isinstance(solution, LogPolicySolution):
        for start in range(market.n_regimes):
            ref = log_pair_value(
                market, x0, start, solution.fractions, TIGHT_QUADRATURE
            )
            est = _mc(cfg, LogUtilityFn(policy=solution.policy, x0=x0),
                      start_regime=start)
            rows.append(_se_check(
                "value", f"log_value[start={start}]", ref, est))
        t0 = time.perf_counter()
        shift = (
            log_pair_value(market, 2.0 * x0, 0, solution.fractions,
                           TIGHT_QUADRATURE)
            - log_pair_value(market, x0, 0, solution.fractions,
                             TIGHT_QUADRATURE)
        )
        rows.append(_abs_check(
            "value", "wealth_shift[x -> 2x]",
            (market.horizon + 1.0) * math.log(2.0), shift, _PATHWISE_TOL,
            elapsed=time.perf_counter() - t0,
        ))
    else:
        alpha = solution.alpha
        for start in range(market.n_regimes):
            ref = power_terminal_value(
                market, x0, alpha, solution.fractions, start,
                settings=TIGHT_QUADRATURE,
            )
            est = _mc(
                cfg,
                PowerUtilityFn(policy=solution.terminal_only_policy,
                               alpha=alpha, x0=x0),
                start_regime=start,
            )
            rows.append(_se_check(
                "value", f"power_terminal_value[start={start}]", ref, est))
        if solution.consistent:
            ref = power_pair_value(market, x0, alpha)
            est = _mc(cfg, PowerUtilityFn(policy=solution.policy,
                                          alpha=alpha, x0=x0))
            rows.append(_se_check(
                "value", "power_pair_value[start=0]", ref, est,
                note="consumption-inclusive objective (drifts consistent)",
            ))
        else:
            rows.append(_abs_check(
                "value", "power_pair_value[skipped]", 0.0, 0.0, 1.0,
                note="configured drifts are not jointly optimal "
                     f"(residuals {tuple(f'{d:.3g}' for d in solution.drift_residuals)}); "
                     "the consumption-inclusive closed form does not apply",
            ))
        t0 = time.perf_counter()
        zero = power_terminal_value(
            market, x0, alpha, solution.fractions, 0, t=0.0,
            settings=TIGHT_QUADRATURE,
        )
        rows.append(_abs_check(
            "value", "zero_horizon_value", x0 ** alpha / alpha, zero, 0.0,
            elapsed=time.perf_counter() - t0,
            note="empty horizon must reproduce the utility of x0 exactly",
        ))
    return rows


_SUITE_FNS: dict[str, Callable[[RunConfig], list[CheckResult]]] = {
    "moments": _suite_moments,
    "martingale": _suite_martingale,
    "budget": _suite_budget,
    "value": _suite_value,
}


def run_suite(cfg: RunConfig, suite: str = "all") -> SuiteReport:
    """Run one named suite, or all of them in a fixed order."""
    if suite != "all" and suite not in _SUITE_FNS:
        raise ConfigError(
            f"unknown suite {suite!r}; choose from {SUITES + ('all',)}",
            where="suite",
        )
    names = SUITES if suite == "all" else (suite,)
    t0 = time.perf_counter()
    checks: list[CheckResult] = []
    for name in names:
        checks.extend(_SUITE_FNS[name](cfg))
    return SuiteReport(
        suite=suite,
        checks=tuple(checks),
        elapsed_seconds=time.perf_counter() - t0,
    )
