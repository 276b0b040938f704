"""Exact simulation of regime paths and pathwise evaluation primitives.

A regime path is the full skeleton of one realization on [0, t_end]: the
event times of the switching chain, the regime before and after each event,
and the mark drawn at each event.  Between events everything of interest
(price, wealth, state-price density, consumption) is an exponential of a
linear function of time, and each event multiplies it by a factor, so every
pathwise quantity in the package reduces to a ``LogLinearProfile``: a
log-level that moves with constant slope per segment and jumps at events.
Terminal values, time integrals of the exponential, and time integrals of
the log-level itself all have closed forms per segment and are evaluated
without any time discretization.

Randomness protocol (the reproducibility contract relies on this exact
draw order; do not reorder):

1. Holding times: with two alternating regimes, standard exponentials are
   drawn in fixed-size blocks (block size a deterministic function of the
   horizon and intensities), consumed in order, re-drawing a full block if
   one runs out.  With a general transition matrix, one scalar exponential
   is drawn per event, followed by one scalar uniform for the next state
   unless the row is degenerate (a single entry equal to 1).
2. Marks: after the skeleton is complete, each regime's marks are drawn as
   one block per regime in increasing regime order, then placed into event
   order.  Point masses consume no draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ModelViolationError, RuinError
from .market import (
    ConstantRate,
    LogOptimalConsumption,
    MarketParams,
    NoConsumption,
    Policy,
    PowerOptimalConsumption,
)

__all__ = [
    "RegimePath",
    "simulate_regime_path",
    "truncate",
    "jump_factors",
    "rho",
    "LogLinearProfile",
    "self_financing_profile",
    "consumption_profile",
    "remaining_wealth_fraction",
    "terminal_wealth",
    "log_price_terminal",
    "telegraph_value",
    "price_value",
    "wealth_no_consumption",
    "wealth_with_consumption",
    "count_marks",
    "PathSample",
    "sample_path_values",
]


@dataclass
class RegimePath:
    """Skeleton of one realization: switch times, regimes, marks."""

    start_regime: int
    t_end: float
    times: np.ndarray       # (K,) event times, increasing, in (0, t_end]
    pre_states: np.ndarray  # (K,) regime the chain leaves at each event
    post_states: np.ndarray  # (K,) regime the chain enters
    marks: np.ndarray       # (K,) marks; marks[n] ~ law of pre_states[n]

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def terminal_state(self) -> int:
        return int(self.post_states[-1]) if len(self.post_states) else self.start_regime

    def seg_states(self) -> np.ndarray:
        """Regime on each of the K+1 segments."""
        return np.concatenate(([self.start_regime], self.post_states))

    def state_at(self, t) -> np.ndarray | int:
        """Regime occupied at time t (right-continuous), scalar or array t."""
        k = np.searchsorted(self.times, t, side="right")
        states = self.seg_states()
        return int(states[k]) if np.isscalar(t) else states[k]

    def seg_durations(self) -> np.ndarray:
        bounds = np.concatenate(([0.0], self.times, [self.t_end]))
        return np.diff(bounds)

    def occupation(self, n_regimes: int) -> np.ndarray:
        """Time spent in each regime over [0, t_end]."""
        return np.bincount(
            self.seg_states(), weights=self.seg_durations(), minlength=n_regimes
        )


def _block_size(max_intensity: float, t_end: float) -> int:
    mean_events = max_intensity * t_end
    return int(math.ceil(mean_events + 10.0 * math.sqrt(mean_events) + 16.0))


def _draw_marks(market: MarketParams, pre: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """Per-regime block draws in regime order, placed back into event order."""
    marks = np.empty(len(pre), dtype=float)
    for i in range(market.n_regimes):
        mask = pre == i
        n_i = int(mask.sum())
        if n_i:
            marks[mask] = market.regimes[i].jump.sample(rng, n_i)
    return marks


def simulate_regime_path(
    market: MarketParams,
    rng: np.random.Generator,
    start_regime: int = 0,
    t_end: float | None = None,
) -> RegimePath:
    """Simulate the switching skeleton and marks exactly (no discretization)."""
    if not 0 <= start_regime < market.n_regimes:
        raise ConfigError(
            f"start regime {start_regime} out of range for "
            f"{market.n_regimes} regimes",
            where="start_regime",
        )
    T = market.horizon if t_end is None else float(t_end)
    if not (T >= 0 and math.isfinite(T)):
        raise ConfigError("path end time must be finite and >= 0", where="t_end")

    intensities = np.array([reg.intensity for reg in market.regimes])
    if market.alternating_two_regime:
        times, pre = _skeleton_alternating(intensities, start_regime, T, rng)
        post = 1 - pre
    else:
        times, pre, post = _skeleton_general(
            market, intensities, start_regime, T, rng
        )
    marks = _draw_marks(market, pre, rng)
    return RegimePath(
        start_regime=start_regime,
        t_end=T,
        times=times,
        pre_states=pre,
        post_states=post,
        marks=marks,
    )


def _skeleton_alternating(intensities, start_regime, T, rng):
    lam = (float(intensities[0]), float(intensities[1]))
    block = _block_size(max(lam), T)
    exps = rng.standard_exponential(block)
    idx = 0
    t = 0.0
    s = start_regime
    times: list[float] = []
    pre: list[int] = []
    while True:
        if idx == len(exps):
            exps = rng.standard_exponential(block)
            idx = 0
        t += exps[idx] / lam[s]
        idx += 1
        if t > T:
            break
        times.append(t)
        pre.append(s)
        s = 1 - s
    return np.asarray(times, dtype=float), np.asarray(pre, dtype=np.int64)


def _skeleton_general(market, intensities, start_regime, T, rng):
    rows = [np.asarray(row, dtype=float) for row in market.transition]
    cum_rows = [np.cumsum(row) for row in rows]
    deterministic_next = [
        int(np.argmax(row)) if np.max(row) == 1.0 else -1 for row in rows
    ]
    t = 0.0
    s = start_regime
    times: list[float] = []
    pre: list[int] = []
    post: list[int] = []
    while True:
        t += rng.standard_exponential() / intensities[s]
        if t > T:
            break
        times.append(t)
        pre.append(s)
        nxt = deterministic_next[s]
        if nxt < 0:
            u = rng.random()
            nxt = int(
                min(np.searchsorted(cum_rows[s], u, side="right"), len(rows) - 1)
            )
        post.append(nxt)
        s = nxt
    return (
        np.asarray(times, dtype=float),
        np.asarray(pre, dtype=np.int64),
        np.asarray(post, dtype=np.int64),
    )


def truncate(path: RegimePath, t: float) -> RegimePath:
    """Restriction of the path to [0, t]; an event exactly at t is kept."""
    t = float(t)
    if not (0.0 <= t <= path.t_end):
        raise ConfigError(
            f"truncation time {t:g} outside [0, {path.t_end:g}]", where="t"
        )
    k = int(np.searchsorted(path.times, t, side="right"))
    return RegimePath(
        start_regime=path.start_regime,
        t_end=t,
        times=path.times[:k],
        pre_states=path.pre_states[:k],
        post_states=path.post_states[:k],
        marks=path.marks[:k],
    )


def jump_factors(market: MarketParams, path: RegimePath) -> np.ndarray:
    """Relative jump sizes f(Y_n), applying each pre-state regime's jump map."""
    if all(reg.jump_map.name == "identity" for reg in market.regimes):
        return path.marks
    factors = np.empty(path.n_events, dtype=float)
    for i, reg in enumerate(market.regimes):
        mask = path.pre_states == i
        if mask.any():
            fn = reg.jump_map.fn
            factors[mask] = [fn(y) for y in path.marks[mask]]
    return factors


def rho(slopes, durations):
    """Vectorized ∫_0^d e^{a u} du = (e^{a d} - 1)/a with the a=0 limit d."""
    a = np.asarray(slopes, dtype=float)
    d = np.asarray(durations, dtype=float)
    safe = np.where(a == 0.0, 1.0, a)
    out = np.expm1(a * d) / safe
    return np.where(a == 0.0, d, out)


@dataclass
class LogLinearProfile:
    """A positive pathwise process written as exp(level(t)).

    The level starts at ``l0``, moves with slope ``slopes[k]`` on segment k,
    and jumps by ``jumps[n]`` at event n.  Profiles for price, wealth,
    state-price density and consumption all share this shape, and profiles
    over the same path combine additively in the level.
    """

    l0: float
    slopes: np.ndarray     # (K+1,)
    durations: np.ndarray  # (K+1,)
    jumps: np.ndarray      # (K,)

    def seg_start_levels(self) -> np.ndarray:
        inc = self.slopes[:-1] * self.durations[:-1] + self.jumps
        return self.l0 + np.concatenate(([0.0], np.cumsum(inc)))

    def terminal_level(self) -> float:
        return float(
            self.l0 + np.dot(self.slopes, self.durations) + self.jumps.sum()
        )

    def level_at(self, t, event_times: np.ndarray | None = None):
        """Level at time t (right-continuous at events), scalar or array t.

        Pass the path's own event times when exact placement of queries that
        sit on an event matters; the default reconstructs boundaries from
        the durations, which is subject to summation roundoff.
        """
        if event_times is None:
            event_times = np.cumsum(self.durations)[:-1]
        else:
            event_times = np.asarray(event_times, dtype=float)
        k = np.searchsorted(event_times, t, side="right")
        starts = np.concatenate(([0.0], event_times))
        out = self.seg_start_levels()[k] + self.slopes[k] * (np.asarray(t) - starts[k])
        return float(out) if np.isscalar(t) else out

    def terminal_value(self) -> float:
        return math.exp(self.terminal_level())

    def integral_exp(self, scale: float = 1.0) -> float:
        """∫_0^T exp(scale * level(t)) dt, exactly per segment."""
        levels = self.seg_start_levels()
        with np.errstate(over="ignore"):
            terms = np.exp(scale * levels) * rho(scale * self.slopes, self.durations)
        return float(terms.sum())

    def integral_level(self) -> float:
        """∫_0^T level(t) dt (the log of the process integrates linearly)."""
        levels = self.seg_start_levels()
        d = self.durations
        return float(np.dot(levels, d) + 0.5 * np.dot(self.slopes, d * d))

    def combine(self, other: "LogLinearProfile") -> "LogLinearProfile":
        """Pointwise product of the two processes (levels add)."""
        return LogLinearProfile(
            l0=self.l0 + other.l0,
            slopes=self.slopes + other.slopes,
            durations=self.durations,
            jumps=self.jumps + other.jumps,
        )

    def scaled(self, factor: float) -> "LogLinearProfile":
        """The process raised to a power (level scaled)."""
        return LogLinearProfile(
            l0=factor * self.l0,
            slopes=factor * self.slopes,
            durations=self.durations,
            jumps=factor * self.jumps,
        )


def state_profile(path: RegimePath, per_regime_slopes,
                  event_jumps, l0: float = 0.0) -> LogLinearProfile:
    """Profile whose slope depends only on the current regime."""
    rates = np.asarray(per_regime_slopes, dtype=float)
    return LogLinearProfile(
        l0=l0,
        slopes=rates[path.seg_states()],
        durations=path.seg_durations(),
        jumps=np.asarray(event_jumps, dtype=float),
    )


def log_price_profile(market: MarketParams, path: RegimePath) -> LogLinearProfile:
    """Price path: per-regime drift, multiplicative jumps 1 + f(Y)."""
    factors = jump_factors(market, path)
    if np.any(factors <= -1.0):
        n = int(np.argmax(factors <= -1.0))
        raise ModelViolationError(
            f"price factor 1 + f = {1.0 + factors[n]:.6g} <= 0 at event {n}; "
            "relative jumps must stay above -1"
        )
    drifts = [reg.drift for reg in market.regimes]
    return state_profile(
        path, drifts, np.log1p(factors), l0=math.log(market.s0)
    )


def log_price_terminal(market: MarketParams, path: RegimePath) -> float:
    return log_price_profile(market, path).terminal_level()


def self_financing_profile(
    market: MarketParams, policy: Policy, path: RegimePath
) -> LogLinearProfile:
    """Unit self-financing wealth for the policy's fractions (no consumption).

    Raises RuinError if a jump wipes out the position (1 + pi*f <= 0).
    """
    fr = np.asarray(policy.fractions, dtype=float)
    rates = np.array(
        [pi * reg.drift + (1.0 - pi) * reg.rate
         for pi, reg in zip(fr, market.regimes)]
    )
    factors = jump_factors(market, path)
    wf = 1.0 + fr[path.pre_states] * factors
    if np.any(wf <= 0.0):
        n = int(np.argmax(wf <= 0.0))
        raise RuinError(
            f"wealth wiped out at event {n} (t={path.times[n]:.6g}): "
            f"jump factor {factors[n]:.6g} with fraction "
            f"{fr[path.pre_states[n]]:.6g}"
        )
    return state_profile(path, rates, np.log(wf))


def consumption_profile(
    market: MarketParams,
    policy: Policy,
    path: RegimePath,
    x0: float,
    v1: LogLinearProfile | None = None,
) -> LogLinearProfile | None:
    """Consumption-rate process for the policy's rule, or None when zero."""
    rule = policy.consumption
    if isinstance(rule, NoConsumption):
        return None
    if isinstance(rule, ConstantRate):
        if rule.rate == 0.0:
            return None
        return LogLinearProfile(
            l0=math.log(rule.rate),
            slopes=np.zeros(path.n_events + 1),
            durations=path.seg_durations(),
            jumps=np.zeros(path.n_events),
        )
    if v1 is None:
        v1 = self_financing_profile(market, policy, path)
    scale = math.log(x0 / (market.horizon + 1.0))
    if isinstance(rule, LogOptimalConsumption):
        return LogLinearProfile(
            l0=scale + v1.l0,
            slopes=v1.slopes,
            durations=v1.durations,
            jumps=v1.jumps,
        )
    if isinstance(rule, PowerOptimalConsumption):
        alpha = rule.alpha
        slopes = np.empty(market.n_regimes)
        for i, (pi, reg) in enumerate(zip(policy.fractions, market.regimes)):
            phi_bar = reg.integrate_jump(lambda f: (1.0 + pi * f) ** alpha)
            slopes[i] = reg.intensity * (1.0 - phi_bar) / alpha
        return LogLinearProfile(
            l0=scale,
            slopes=slopes[path.seg_states()],
            durations=v1.durations,
            jumps=v1.jumps,
        )
    raise ConfigError(
        f"unknown consumption rule {type(rule).__name__}", where="policy.consumption"
    )


def remaining_wealth_fraction(
    x0: float,
    v1: LogLinearProfile,
    c_profile: LogLinearProfile | None,
) -> float:
    """Terminal value of x0 - ∫ c_t / V1_t dt (wealth left after funding c).

    The ratio c/V1 is itself log-linear, so the integral is exact.  The
    remainder is nonincreasing in time, so ruin is equivalent to a
    nonpositive terminal value.
    """
    if c_profile is None:
        return x0
    spent = c_profile.combine(v1.scaled(-1.0)).integral_exp()
    return x0 - spent


def terminal_wealth(
    market: MarketParams, policy: Policy, path: RegimePath, x0: float
) -> float:
    """Terminal wealth under the policy (fractions plus consumption rule)."""
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    v1 = self_financing_profile(market, policy, path)
    c_prof = consumption_profile(market, policy, path, x0, v1=v1)
    xi = remaining_wealth_fraction(x0, v1, c_prof)
    if xi <= 0.0:
        raise RuinError(
            f"consumption exhausts wealth before the horizon (remaining "
            f"fraction {xi:.6g} of initial wealth)"
        )
    return xi * v1.terminal_value()


def _check_path_time(path: RegimePath, t) -> None:
    t = np.asarray(t, dtype=float)
    if t.size and (float(t.min()) < 0.0 or float(t.max()) > path.t_end):
        raise ConfigError(
            f"evaluation time outside [0, {path.t_end:g}]", where="t"
        )


def telegraph_value(market: MarketParams, path: RegimePath, t,
                    tendencies=None):
    """Additive regime-switching process at time t: per-regime linear drift
    plus the raw jump sizes summed over events up to and including t.

    ``tendencies`` overrides the per-regime slopes (default: the drifts).
    """
    _check_path_time(path, t)
    slopes = ([reg.drift for reg in market.regimes]
              if tendencies is None else tendencies)
    prof = state_profile(path, slopes, jump_factors(market, path))
    return prof.level_at(t, event_times=path.times)


def price_value(market: MarketParams, path: RegimePath, t):
    """Price at time t (right-continuous; a jump at t is included)."""
    _check_path_time(path, t)
    level = log_price_profile(market, path).level_at(t, event_times=path.times)
    return np.exp(level) if isinstance(level, np.ndarray) else math.exp(level)


def wealth_no_consumption(market: MarketParams, policy: Policy,
                          path: RegimePath, t, x0: float = 1.0):
    """Self-financing wealth at time t for the policy's fractions."""
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    _check_path_time(path, t)
    v1 = self_financing_profile(market, policy, path)
    level = v1.level_at(t, event_times=path.times)
    return x0 * (np.exp(level) if isinstance(level, np.ndarray) else math.exp(level))


def wealth_with_consumption(market: MarketParams, policy: Policy,
                            path: RegimePath, t: float, x0: float) -> float:
    """Wealth at time t after continuously funding the consumption rule.

    Equals (x0 - spending up to t, in units of unit self-financing wealth)
    times unit self-financing wealth at t.  Raises RuinError once the
    remaining fraction is exhausted.
    """
    if x0 <= 0:
        raise ConfigError("initial wealth must be > 0", where="x0")
    _check_path_time(path, t)
    part = truncate(path, float(t))
    v1 = self_financing_profile(market, policy, part)
    c_prof = consumption_profile(market, policy, part, x0, v1=v1)
    xi = remaining_wealth_fraction(x0, v1, c_prof)
    if xi <= 0.0:
        raise RuinError(
            f"consumption exhausts wealth by t={t:g} (remaining fraction "
            f"{xi:.6g} of initial wealth)"
        )
    return xi * v1.terminal_value()


@dataclass
class PathSample:
    """One path evaluated on a time grid (event times always included)."""

    path: RegimePath
    times: np.ndarray
    regimes: np.ndarray
    telegraph: np.ndarray
    prices: np.ndarray
    wealth: np.ndarray | None = None


def sample_path_values(
    market: MarketParams,
    path: RegimePath,
    grid: np.ndarray | None = None,
    policy: Policy | None = None,
    x0: float = 1.0,
) -> PathSample:
    """Evaluate telegraph, price and (optionally) wealth on grid ∪ events.

    The endpoints 0 and t_end and every event time are always included.
    Wealth is filled only when a policy is given; consumption rules other
    than none require a pass per grid point.
    """
    pieces = [np.array([0.0, path.t_end]), path.times]
    if grid is not None:
        g = np.asarray(grid, dtype=float)
        _check_path_time(path, g)
        pieces.append(g)
    times = np.unique(np.concatenate(pieces))
    regimes = path.state_at(times)
    telegraph = telegraph_value(market, path, times)
    prices = price_value(market, path, times)
    wealth = None
    if policy is not None:
        if isinstance(policy.consumption, NoConsumption):
            wealth = wealth_no_consumption(market, policy, path, times, x0)
        else:
            wealth = np.array(
                [wealth_with_consumption(market, policy, path, float(t), x0)
                 for t in times]
            )
    return PathSample(
        path=path,
        times=times,
        regimes=regimes,
        telegraph=telegraph,
        prices=prices,
        wealth=wealth,
    )


def count_marks(
    path: RegimePath,
    regime: int | None = None,
    interval: tuple[float, float] | None = None,
) -> int:
    """Number of events, optionally from one pre-state regime and with the
    raw mark in the half-open interval (lo, hi]."""
    sel = np.ones(path.n_events, dtype=bool)
    if regime is not None:
        sel &= path.pre_states == regime
    if interval is not None:
        lo, hi = interval
        sel &= (path.marks > lo) & (path.marks <= hi)
    return int(sel.sum())
