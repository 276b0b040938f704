"""Closed-form moments for two-regime jump telegraph processes.

The telegraph process here is X_t = ∫_0^t c_{e(u)} du + Σ_{events n ≤ t} f(Y_n)
where e is the deterministic-alternation two-regime chain, c_i are per-regime
tendencies (defaulting to the market drifts) and the jumps are the mapped
marks.  Everything in this module requires the alternating two-regime chain;
general chains are covered by Monte Carlo only.

Derivations are by solving the coupled linear ODE system satisfied by the
conditional moments; the same systems integrate numerically in the test
suite's independent oracle, which pins these formulas down.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .distributions import DEFAULT_QUADRATURE, QuadratureSettings
from .errors import ConfigError
from .market import MarketParams, cached_exp_jump, cached_mean_jump

__all__ = [
    "telegraph_mean",
    "telegraph_mean_integral",
    "telegraph_exp_moment",
    "compensated_martingale_mean",
    "expected_occupation",
    "expected_mark_count",
]


def _tendencies(market: MarketParams, tendencies) -> tuple[float, float]:
    if tendencies is None:
        return (market.regimes[0].drift, market.regimes[1].drift)
    vals = tuple(float(c) for c in tendencies)
    if len(vals) != 2:
        raise ConfigError("two tendencies required", where="tendencies")
    return vals


def _check_time(t: float) -> float:
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ConfigError("time must be finite and >= 0", where="t")
    return t


def _one_minus_exp_over(a: float, t: float) -> float:
    """(1 - e^{-a t}) / a, stable as a*t -> 0."""
    return -math.expm1(-a * t) / a


def _t_minus_ramp(a: float, t: float) -> float:
    """t - (1 - e^{-a t})/a, series-guarded against cancellation."""
    x = a * t
    if x < 1e-3:
        return t * x * (0.5 - x / 6.0 + x * x / 24.0 - x ** 3 / 120.0 + x ** 4 / 720.0)
    return t - _one_minus_exp_over(a, t)


def _mean_pieces(market: MarketParams, tendencies, settings, jump_means=None):
    c0, c1 = _tendencies(market, tendencies)
    r0, r1 = market.regimes
    lam0, lam1 = r0.intensity, r1.intensity
    if jump_means is None:
        eta0 = cached_mean_jump(r0, settings)
        eta1 = cached_mean_jump(r1, settings)
    else:
        eta0, eta1 = (float(e) for e in jump_means)
    d0 = c0 + lam0 * eta0
    d1 = c1 + lam1 * eta1
    two_lam = lam0 + lam1
    weighted = lam1 * d0 + lam0 * d1
    delta = d0 - d1
    return lam0, lam1, two_lam, weighted, delta


def telegraph_mean(
    market: MarketParams,
    t: float,
    start_regime: int,
    tendencies: Optional[Sequence[float]] = None,
    jump_means: Optional[Sequence[float]] = None,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[X_t] given the starting regime.

    The mean solves a 2x2 linear ODE system whose solution splits into a
    linear-in-t part (the intensity-weighted average total tendency) and a
    relaxation part decaying at the total switch rate.  ``jump_means``
    overrides the expected jump size per regime, so the same formula serves
    any additive functional with per-event increments g(Y_n): pass E[g(Y)].
    """
    market.require_alternating("telegraph mean")
    t = _check_time(t)
    lam0, lam1, two_lam, weighted, delta = _mean_pieces(
        market, tendencies, settings, jump_means
    )
    ramp = _one_minus_exp_over(two_lam, t)
    if start_regime == 0:
        return (weighted * t + lam0 * delta * ramp) / two_lam
    if start_regime == 1:
        return (weighted * t - lam1 * delta * ramp) / two_lam
    raise ConfigError("start regime must be 0 or 1", where="start_regime")


def telegraph_mean_integral(
    market: MarketParams,
    t_end: float,
    start_regime: int,
    tendencies: Optional[Sequence[float]] = None,
    jump_means: Optional[Sequence[float]] = None,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """∫_0^T E[X_t] dt in closed form (integrating the mean formula)."""
    market.require_alternating("telegraph mean integral")
    T = _check_time(t_end)
    lam0, lam1, two_lam, weighted, delta = _mean_pieces(
        market, tendencies, settings, jump_means
    )
    tail = _t_minus_ramp(two_lam, T) / two_lam
    if start_regime == 0:
        return (0.5 * weighted * T * T + lam0 * delta * tail) / two_lam
    if start_regime == 1:
        return (0.5 * weighted * T * T - lam1 * delta * tail) / two_lam
    raise ConfigError("start regime must be 0 or 1", where="start_regime")


def compensated_martingale_mean(
    market: MarketParams,
    t: float,
    start_regime: int,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Mean of the jump process compensated by its per-regime drift.

    With tendencies set to minus intensity times mean jump size, the drift
    exactly offsets the expected jumps, so the mean is 0 for every t; the
    returned value measures only cancellation error in the closed form and
    is exposed as an engine self-check.
    """
    means = [cached_mean_jump(reg, settings) for reg in market.regimes]
    tendencies = tuple(
        -reg.intensity * m for reg, m in zip(market.regimes, means)
    )
    return telegraph_mean(
        market, t, start_regime,
        tendencies=tendencies, jump_means=means, settings=settings,
    )


def _sinhc(x: float) -> float:
    """sinh(x)/x with the small-x series."""
    if abs(x) < 1e-6:
        return 1.0 + x * x / 6.0
    return math.sinh(x) / x


def telegraph_exp_moment(
    market: MarketParams,
    t: float,
    start_regime: int,
    tendencies: Optional[Sequence[float]] = None,
    exp_jump_means: Optional[Sequence[float]] = None,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[e^{X_t}] given the starting regime.

    ``exp_jump_means`` overrides E[e^{f(Y)}] per regime, which lets callers
    reuse the formula for arbitrary multiplicative jump tilts: pass the
    expected jump factor of whatever exponential functional is needed.
    Raises DivergenceError if an expected jump factor is infinite.
    """
    market.require_alternating("telegraph exponential moment")
    t = _check_time(t)
    c0, c1 = _tendencies(market, tendencies)
    r0, r1 = market.regimes
    lam0, lam1 = r0.intensity, r1.intensity
    if exp_jump_means is None:
        phi0 = cached_exp_jump(r0, settings)
        phi1 = cached_exp_jump(r1, settings)
    else:
        phi0, phi1 = (float(p) for p in exp_jump_means)
    half_sum_c = 0.5 * (c0 + c1)
    half_diff_c = 0.5 * (c0 - c1)
    half_sum_lam = 0.5 * (lam0 + lam1)
    half_diff_lam = 0.5 * (lam0 - lam1)
    gap = half_diff_c - half_diff_lam
    disc = gap * gap + lam0 * lam1 * phi0 * phi1
    if disc <= 0.0:
        # Only possible with negative tilt means supplied by the caller.
        raise ConfigError(
            "exponential moment needs a positive discriminant; "
            "expected jump factors must be positive",
            where="exp_jump_means",
        )
    s = math.sqrt(disc)
    base = math.exp(t * (half_sum_c - half_sum_lam))
    ch = math.cosh(t * s)
    sh_over_s = t * _sinhc(t * s)
    if start_regime == 0:
        return base * (ch + (gap + lam0 * phi0) * sh_over_s)
    if start_regime == 1:
        return base * (ch - (gap - lam1 * phi1) * sh_over_s)
    raise ConfigError("start regime must be 0 or 1", where="start_regime")


def expected_occupation(market: MarketParams, t: float, start_regime: int) -> tuple[float, float]:
    """Expected time spent in (regime 0, regime 1) up to t."""
    market.require_alternating("expected occupation")
    t = _check_time(t)
    lam0 = market.regimes[0].intensity
    lam1 = market.regimes[1].intensity
    total = lam0 + lam1
    ramp = _one_minus_exp_over(total, t)
    if start_regime == 0:
        occ0 = (lam1 * t + lam0 * ramp) / total
    elif start_regime == 1:
        occ0 = (lam1 * t - lam1 * ramp) / total
    else:
        raise ConfigError("start regime must be 0 or 1", where="start_regime")
    return occ0, t - occ0


def expected_mark_count(
    market: MarketParams,
    t: float,
    start_regime: int,
    regime: Optional[int] = None,
    interval: Optional[tuple[float, float]] = None,
) -> float:
    """E[#events] with optional pre-state filter and raw-mark interval (lo, hi].

    By the compensator of the marked point process, the expectation equals
    Σ_i intensity_i * P_i(mark in interval) * E[occupation_i].
    """
    occ = expected_occupation(market, t, start_regime)
    total = 0.0
    for i, reg in enumerate(market.regimes):
        if regime is not None and i != regime:
            continue
        p = 1.0 if interval is None else reg.jump.prob_interval(*interval)
        total += reg.intensity * p * occ[i]
    return total
