"""Multiplicative jump tilts: density processes and state-price densities.

A tilt assigns each regime a positive weight function of the jump factor.
The associated density process starts at 1, drifts at rate
(1 - E[weight]) * intensity while in a regime, and multiplies by
weight(jump factor) at each event.  With two alternating regimes and finite
weight means the density has constant expectation 1, which is both a
closed-form identity here and a Monte Carlo invariant in the test suite.
Discounting the density by the riskless account gives the state-price
density used in budget-constraint and optimality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .distributions import DEFAULT_QUADRATURE, QuadratureSettings
from .errors import ConfigError
from .market import MarketParams, Policy
from .paths import (
    LogLinearProfile,
    RegimePath,
    consumption_profile,
    jump_factors,
    remaining_wealth_fraction,
    self_financing_profile,
    state_profile,
)
from .telegraph import telegraph_exp_moment

__all__ = [
    "TiltSpec",
    "UnitTilt",
    "LogOptimalTilt",
    "PowerOptimalTilt",
    "CustomTilt",
    "tilt_means",
    "tilt_log_jump_values",
    "density_profile",
    "state_price_profile",
    "martingale_residuals",
    "expected_density_terminal",
    "budget_gap",
]


class TiltSpec:
    """Base class.  Subclasses are frozen dataclasses keyed by their fields."""

    kind: str = "abstract"

    def weight_fn(self, regime_index: int) -> Callable[[float], float]:
        """The weight as a function of the jump factor f(Y)."""
        raise NotImplementedError


@dataclass(frozen=True)
class UnitTilt(TiltSpec):
    """Weight identically 1: no measure change (density stays at 1)."""

    kind = "unit"

    def weight_fn(self, regime_index: int):
        return lambda f: 1.0


@dataclass(frozen=True)
class LogOptimalTilt(TiltSpec):
    """Weights 1/(1 + pi_i * f): the pricing tilt for logarithmic utility.

    With the log-optimal fractions this makes the state-price density the
    exact pathwise reciprocal of self-financing unit wealth.
    """

    fractions: tuple[float, ...]

    kind = "log_optimal"

    def weight_fn(self, regime_index: int):
        pi = self.fractions[regime_index]
        return lambda f: 1.0 / (1.0 + pi * f)


@dataclass(frozen=True)
class PowerOptimalTilt(TiltSpec):
    """Weights (1 + pi_i * f)^(alpha - 1): the pricing tilt for power utility."""

    fractions: tuple[float, ...]
    alpha: float

    kind = "power_optimal"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)", where="tilt.alpha")

    def weight_fn(self, regime_index: int):
        pi = self.fractions[regime_index]
        expo = self.alpha - 1.0
        return lambda f: (1.0 + pi * f) ** expo


@dataclass(frozen=True)
class CustomTilt(TiltSpec):
    """Arbitrary per-regime weight functions of the jump factor.

    Functions must be module-level (picklable) for multi-process Monte Carlo.
    """

    fns: tuple[Callable[[float], float], ...]

    kind = "custom"

    def weight_fn(self, regime_index: int):
        return self.fns[regime_index]


def _require_regime_count(market: MarketParams, tilt: TiltSpec) -> None:
    per_regime = getattr(tilt, "fractions", None)
    if per_regime is None:
        per_regime = getattr(tilt, "fns", None)
    if per_regime is not None and len(per_regime) != market.n_regimes:
        raise ConfigError(
            f"tilt has {len(per_regime)} per-regime entries for "
            f"{market.n_regimes} regimes",
            where="tilt.fractions",
        )


def _fractions_for(tilt: TiltSpec, market: MarketParams) -> np.ndarray:
    _require_regime_count(market, tilt)
    return np.asarray(tilt.fractions, dtype=float)


@lru_cache(maxsize=256)
def _tilt_means_cached(market: MarketParams, tilt: TiltSpec,
                       settings: QuadratureSettings) -> tuple[float, ...]:
    _require_regime_count(market, tilt)
    out = []
    for i, reg in enumerate(market.regimes):
        if isinstance(tilt, UnitTilt):
            out.append(1.0)
        else:
            out.append(reg.integrate_jump(tilt.weight_fn(i), settings))
    return tuple(out)


def tilt_means(market: MarketParams, tilt: TiltSpec,
               settings: QuadratureSettings = DEFAULT_QUADRATURE) -> np.ndarray:
    """E[weight_i(f(Y))] per regime; DivergenceError when infinite."""
    return np.array(_tilt_means_cached(market, tilt, settings))


def tilt_log_jump_values(market: MarketParams, tilt: TiltSpec,
                         path: RegimePath) -> np.ndarray:
    """ln weight at each event of the path (vectorized for the shipped tilts)."""
    factors = jump_factors(market, path)
    if isinstance(tilt, UnitTilt):
        return np.zeros(path.n_events)
    if isinstance(tilt, LogOptimalTilt):
        fr = _fractions_for(tilt, market)
        return -np.log1p(fr[path.pre_states] * factors)
    if isinstance(tilt, PowerOptimalTilt):
        fr = _fractions_for(tilt, market)
        return (tilt.alpha - 1.0) * np.log1p(fr[path.pre_states] * factors)
    out = np.empty(path.n_events)
    for i in range(market.n_regimes):
        mask = path.pre_states == i
        if mask.any():
            fn = tilt.weight_fn(i)
            out[mask] = [math.log(fn(f)) for f in factors[mask]]
    return out


def density_profile(market: MarketParams, tilt: TiltSpec, path: RegimePath,
                    settings: QuadratureSettings = DEFAULT_QUADRATURE) -> LogLinearProfile:
    """The tilt's density process along one path (starts at 1)."""
    means = tilt_means(market, tilt, settings)
    slopes = np.array(
        [(1.0 - h) * reg.intensity for h, reg in zip(means, market.regimes)]
    )
    return state_profile(path, slopes, tilt_log_jump_values(market, tilt, path))


def state_price_profile(market: MarketParams, tilt: TiltSpec, path: RegimePath,
                        settings: QuadratureSettings = DEFAULT_QUADRATURE) -> LogLinearProfile:
    """Discounted density e^{-∫r} times the tilt's density process."""
    means = tilt_means(market, tilt, settings)
    slopes = np.array(
        [(1.0 - h) * reg.intensity - reg.rate
         for h, reg in zip(means, market.regimes)]
    )
    return state_profile(path, slopes, tilt_log_jump_values(market, tilt, path))


def martingale_residuals(market: MarketParams, tilt: TiltSpec,
                         settings: QuadratureSettings = DEFAULT_QUADRATURE) -> np.ndarray:
    """Per-regime drift residual of the discounted tilted price.

    Residual_i = drift_i - rate_i + intensity_i * E[f * weight_i(f)].
    All residuals vanish exactly when the tilt prices the risky asset.
    """
    out = np.empty(market.n_regimes)
    for i, reg in enumerate(market.regimes):
        fn = tilt.weight_fn(i)
        tilted_jump_mean = reg.integrate_jump(lambda f: f * fn(f), settings)
        out[i] = reg.drift - reg.rate + reg.intensity * tilted_jump_mean
    return out


def expected_density_terminal(
    market: MarketParams,
    tilt: TiltSpec,
    t: float,
    start_regime: int,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[density at t] by the closed-form exponential moment.

    For two alternating regimes with finite weight means this is identically
    1; the formula collapses algebraically, so the returned value doubles as
    a consistency check of the moment engine.
    """
    means = tilt_means(market, tilt, settings)
    slopes = [(1.0 - h) * reg.intensity for h, reg in zip(means, market.regimes)]
    return telegraph_exp_moment(
        market, t, start_regime,
        tendencies=slopes, exp_jump_means=tuple(means), settings=settings,
    )


def budget_gap(
    market: MarketParams,
    policy: Policy,
    tilt: TiltSpec,
    path: RegimePath,
    x0: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Pathwise budget imbalance  H_T V_T + ∫ H_t c_t dt - x0.

    H is the tilt's state-price density and V the policy's wealth.  When the
    tilt prices the asset (zero martingale residuals) the expectation over
    paths is zero for any admissible policy; for the log-optimal pair with
    its own tilt the gap vanishes pathwise.
    """
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    v1 = self_financing_profile(market, policy, path)
    h_prof = state_price_profile(market, tilt, path, settings)
    c_prof = consumption_profile(market, policy, path, x0, v1=v1)
    xi_T = remaining_wealth_fraction(x0, v1, c_prof)
    terminal = xi_T * math.exp(h_prof.terminal_level() + v1.terminal_level())
    funded = 0.0
    if c_prof is not None:
        funded = h_prof.combine(c_prof).integral_exp()
    return terminal + funded - x0
