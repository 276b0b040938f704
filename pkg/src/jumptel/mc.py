"""Deterministic Monte Carlo over regime paths.

Reproducibility contract
------------------------
Every path has its own counter-based stream: path ``i`` of a job with seed
``s`` uses ``np.random.Generator(np.random.Philox(key=[s, i]))``, and each
simulated path consumes draws in the fixed order documented in
:mod:`jumptel.paths`.  Paths are therefore independent of how work is split
across processes.  Per-path values are placed into one array by global path
index and reduced with numpy's pairwise summation over the full array, so
``run(job, workers=k)`` returns bit-identical estimates for every k.

The per-path value of a job is defined by its functional.  All functionals
evaluate pathwise closed forms on the exact event skeleton; there is no
time discretization anywhere.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, ReproducibilityError, RuinError
from .market import MarketParams, Policy, validate_policy
from .paths import (
    RegimePath,
    count_marks,
    jump_factors,
    log_price_profile,
    remaining_wealth_fraction,
    self_financing_profile,
    consumption_profile,
    simulate_regime_path,
    state_profile,
)
from .tilts import (
    TiltSpec,
    budget_gap,
    density_profile,
    state_price_profile,
    tilt_means,
)

__all__ = [
    "TelegraphMeanFn",
    "ExpMomentFn",
    "PriceTerminalFn",
    "CountFn",
    "DensityTerminalFn",
    "StatePriceMomentFn",
    "BudgetGapFn",
    "LogUtilityFn",
    "PowerUtilityFn",
    "CompensatorResidualFn",
    "McJob",
    "Estimate",
    "run",
    "reproduce",
]

_CHUNK = 4096


class Functional:
    """Per-path scalar evaluated under a job.  Subclasses are frozen."""

    kind: str = "abstract"

    def prepare(self, market: MarketParams) -> None:
        """One-time validation against the market before any path runs."""

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class TelegraphMeanFn(Functional):
    """X_t = ∫ tendency dt + Σ jump factors (default tendencies: drifts)."""

    tendencies: Optional[tuple[float, ...]] = None

    kind = "telegraph_mean"

    def _rates(self, market: MarketParams) -> np.ndarray:
        if self.tendencies is None:
            return np.array([reg.drift for reg in market.regimes])
        if len(self.tendencies) != market.n_regimes:
            raise ConfigError("one tendency per regime required", where="functional")
        return np.asarray(self.tendencies, dtype=float)

    def prepare(self, market: MarketParams) -> None:
        self._rates(market)

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        prof = state_profile(path, self._rates(market), jump_factors(market, path))
        return prof.terminal_level()


@dataclass(frozen=True)
class ExpMomentFn(TelegraphMeanFn):
    """e^{X_t} for the same telegraph functional."""

    kind = "exp_moment"

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        prof = state_profile(path, self._rates(market), jump_factors(market, path))
        return prof.terminal_value()


@dataclass(frozen=True)
class PriceTerminalFn(Functional):
    """Terminal price S_t (drift exponential times realized jump factors).

    Unlike the raw exponential moment e^{X_t}, whose expectation needs
    E[e^f] and diverges under heavy right tails, E[S_t] only needs the mean
    jump size, so it is finite for every shipped mark family.
    """

    kind = "price_terminal"

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        return log_price_profile(market, path).terminal_value()


@dataclass(frozen=True)
class CountFn(Functional):
    """Number of events, optionally filtered by pre-state regime and by the
    raw mark lying in the half-open interval (lo, hi]."""

    regime: Optional[int] = None
    interval: Optional[tuple[float, float]] = None

    kind = "count"

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        return float(count_marks(path, self.regime, self.interval))


@dataclass(frozen=True)
class DensityTerminalFn(Functional):
    """Terminal value of a tilt's density process (expectation should be 1)."""

    tilt: TiltSpec

    kind = "density_terminal"

    def prepare(self, market: MarketParams) -> None:
        tilt_means(market, self.tilt)  # fail fast if a weight mean diverges

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        return density_profile(market, self.tilt, path).terminal_value()


@dataclass(frozen=True)
class StatePriceMomentFn(Functional):
    """(H_T)^exponent for a tilt's state-price density H (rates discounted).

    Exponent alpha/(alpha-1) with the power tilt at a solution makes this a
    martingale started at 1, a useful mean-one check alongside the plain
    density (and the exponent 1 case prices the unit payoff).
    """

    tilt: TiltSpec
    exponent: float = 1.0

    kind = "state_price_moment"

    def prepare(self, market: MarketParams) -> None:
        tilt_means(market, self.tilt)

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        level = state_price_profile(market, self.tilt, path).terminal_level()
        return math.exp(self.exponent * level)


@dataclass(frozen=True)
class BudgetGapFn(Functional):
    """H_T V_T + ∫ H c dt - x0 for a policy under a tilt's state prices."""

    policy: Policy
    tilt: TiltSpec
    x0: float = 1.0

    kind = "budget_gap"

    def prepare(self, market: MarketParams) -> None:
        validate_policy(market, self.policy)
        tilt_means(market, self.tilt)

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        return budget_gap(market, self.policy, self.tilt, path, self.x0)


@dataclass(frozen=True)
class LogUtilityFn(Functional):
    """∫ ln c dt + ln V_T; just ln V_T when the policy consumes nothing."""

    policy: Policy
    x0: float = 1.0

    kind = "log_utility"

    def prepare(self, market: MarketParams) -> None:
        validate_policy(market, self.policy)
        if self.x0 <= 0:
            raise ConfigError("initial wealth must be > 0", where="functional.x0")

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        v1 = self_financing_profile(market, self.policy, path)
        c_prof = consumption_profile(market, self.policy, path, self.x0, v1=v1)
        if c_prof is None:
            return math.log(self.x0) + v1.terminal_level()
        xi = remaining_wealth_fraction(self.x0, v1, c_prof)
        if xi <= 0.0:
            raise RuinError("consumption exhausts wealth before the horizon")
        log_v_terminal = math.log(xi) + v1.terminal_level()
        return c_prof.integral_level() + log_v_terminal


@dataclass(frozen=True)
class PowerUtilityFn(Functional):
    """(1/alpha)(∫ c^alpha dt + V_T^alpha); terminal-only without consumption."""

    policy: Policy
    alpha: float
    x0: float = 1.0

    kind = "power_utility"

    def prepare(self, market: MarketParams) -> None:
        validate_policy(market, self.policy)
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)", where="functional.alpha")
        if self.x0 <= 0:
            raise ConfigError("initial wealth must be > 0", where="functional.x0")

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        v1 = self_financing_profile(market, self.policy, path)
        c_prof = consumption_profile(market, self.policy, path, self.x0, v1=v1)
        if c_prof is None:
            v_term = self.x0 * v1.terminal_value()
            return v_term ** self.alpha / self.alpha
        xi = remaining_wealth_fraction(self.x0, v1, c_prof)
        if xi <= 0.0:
            raise RuinError("consumption exhausts wealth before the horizon")
        v_term = xi * v1.terminal_value()
        running = c_prof.integral_exp(scale=self.alpha)
        return (running + v_term ** self.alpha) / self.alpha


@dataclass(frozen=True)
class CompensatorResidualFn(Functional):
    """N_t(A) - Σ_i intensity_i P_i(A) (time in i): mean zero by construction."""

    interval: Optional[tuple[float, float]] = None

    kind = "compensator_residual"

    def evaluate(self, market: MarketParams, path: RegimePath) -> float:
        counted = count_marks(path, None, self.interval)
        occ = path.occupation(market.n_regimes)
        compensator = 0.0
        for i, reg in enumerate(market.regimes):
            p = 1.0 if self.interval is None else reg.jump.prob_interval(*self.interval)
            compensator += reg.intensity * p * occ[i]
        return counted - compensator


@dataclass(frozen=True)
class McJob:
    """A reproducible estimation job: market, per-path functional, size, seed.

    ``t_end`` trims simulation to an earlier time than the market horizon
    (useful for moment curves); None means the full horizon.
    """

    market: MarketParams
    functional: Functional
    n_paths: int
    seed: int
    start_regime: int = 0
    t_end: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.n_paths < 100:
            raise ConfigError(
                "n_paths must be >= 100 (standard errors from fewer paths "
                "are not meaningful)", where="mc.n_paths")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", where="mc.workers")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0", where="mc.seed")
        if not 0 <= self.start_regime < self.market.n_regimes:
            raise ConfigError("start regime out of range", where="mc.start_regime")
        if self.t_end is not None and not (
            0 <= self.t_end and math.isfinite(self.t_end)
        ):
            raise ConfigError("t_end must be finite and >= 0", where="mc.t_end")


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with the sample standard error of the mean."""

    mean: float
    stderr: float
    n_paths: int
    seed: int
    elapsed_seconds: float

    def matches(self, other: "Estimate") -> bool:
        """Bit-exact agreement of the statistical fields (time excluded)."""
        return (
            self.mean == other.mean
            and self.stderr == other.stderr
            and self.n_paths == other.n_paths
            and self.seed == other.seed
        )


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_chunk(job: McJob, start: int, count: int) -> np.ndarray:
    out = np.empty(count, dtype=float)
    market = job.market
    functional = job.functional
    for k in range(count):
        rng = _path_rng(job.seed, start + k)
        path = simulate_regime_path(
            market, rng, start_regime=job.start_regime, t_end=job.t_end
        )
        out[k] = functional.evaluate(market, path)
    return out


def run(job: McJob, workers: Optional[int] = None) -> Estimate:
    """Execute the job; the estimate is bit-identical for any worker count.

    ``workers`` overrides the job's own worker count when given.
    """
    workers = job.workers if workers is None else workers
    if workers < 1:
        raise ConfigError("workers must be >= 1", where="mc.workers")
    job.functional.prepare(job.market)
    t0 = time.perf_counter()
    n = job.n_paths
    values = np.empty(n, dtype=float)
    chunks = [(s, min(_CHUNK, n - s)) for s in range(0, n, _CHUNK)]
    if workers == 1 or len(chunks) == 1:
        for start, count in chunks:
            values[start:start + count] = _run_chunk(job, start, count)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, job, s, c) for s, c in chunks]
            for (start, count), fut in zip(chunks, futures):
                values[start:start + count] = fut.result()
    mean = float(np.mean(values))
    if n > 1:
        stderr = float(np.std(values, ddof=1) / math.sqrt(n))
    else:
        stderr = math.inf
    return Estimate(
        mean=mean,
        stderr=stderr,
        n_paths=n,
        seed=job.seed,
        elapsed_seconds=time.perf_counter() - t0,
    )


def reproduce(job: McJob, estimate: Estimate, workers: Optional[int] = None) -> Estimate:
    """Re-run the job and demand bit-exact agreement with ``estimate``."""
    fresh = run(job, workers=workers)
    if not fresh.matches(estimate):
        raise ReproducibilityError(
            "re-run did not reproduce the estimate bit-exactly",
            original=(estimate.mean, estimate.stderr),
            reproduced=(fresh.mean, fresh.stderr),
        )
    return fresh
