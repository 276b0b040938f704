"""Market specification: regimes, switching chain, policies, admissibility.

The market has finitely many regimes driven by a continuous-time Markov
chain.  While the chain sits in regime i the riskless account grows at rate
``rate_i`` and the risky log-price drifts at ``drift_i``; when the chain
leaves regime i (exit intensity ``intensity_i``) the price jumps by a
relative factor 1 + f(Y) with Y drawn from regime i's mark distribution.
With two regimes the chain alternates deterministically, which is the case
all closed-form moment machinery covers; markets with three or more regimes
take an explicit zero-diagonal transition matrix and are supported by
simulation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

from .distributions import (
    DEFAULT_QUADRATURE,
    IDENTITY_MAP,
    JumpMap,
    MarkDistribution,
    QuadratureSettings,
    exp_jump,
    mean_jump,
)
from .errors import ConfigError

__all__ = [
    "RegimeSpec",
    "MarketParams",
    "AdmissibleInterval",
    "ConsumptionRule",
    "NoConsumption",
    "ConstantRate",
    "LogOptimalConsumption",
    "PowerOptimalConsumption",
    "Policy",
    "validate_policy",
]


@dataclass(frozen=True)
class RegimeSpec:
    """One regime: riskless rate, risky drift, exit intensity, jump law."""

    rate: float
    drift: float
    intensity: float
    jump: MarkDistribution
    jump_map: JumpMap = IDENTITY_MAP

    def __post_init__(self):
        if not math.isfinite(self.rate):
            raise ConfigError("riskless rate must be finite", where="regime.rate")
        if not math.isfinite(self.drift):
            raise ConfigError("drift must be finite", where="regime.drift")
        if not (self.intensity > 0 and math.isfinite(self.intensity)):
            raise ConfigError(
                "exit intensity must be finite and > 0", where="regime.intensity"
            )
        self._validate_jump_image()

    def _validate_jump_image(self) -> None:
        lo, hi = self.jump.support()
        flo, fhi = self.jump_map.f_range(lo, hi)
        if flo > fhi:
            flo, fhi = fhi, flo
        lo_attained, hi_attained = self.jump.endpoints_attained()
        if flo < -1.0 or (flo == -1.0 and lo_attained):
            raise ConfigError(
                "jump factors must stay above -1 (no total-loss jumps)",
                where="regime.jump",
            )
        # Atoms must not sit at zero: a jump that does not move the price is
        # indistinguishable from no jump and breaks the jump-counting laws.
        from .distributions import Discrete, PointMass

        if isinstance(self.jump, PointMass):
            fy = self.jump_map.fn(self.jump.y)
            if fy == 0.0 or fy <= -1.0:
                raise ConfigError(
                    "point-mass jump factor must be nonzero and above -1",
                    where="regime.jump.y",
                )
        elif isinstance(self.jump, Discrete):
            for yk in self.jump.ys:
                fk = self.jump_map.fn(yk)
                if fk == 0.0 or fk <= -1.0:
                    raise ConfigError(
                        "every discrete jump factor must be nonzero and above -1",
                        where="regime.jump.ys",
                    )

    # -- jump-factor image and moments -----------------------------------

    def jump_image(self) -> tuple[float, float, bool, bool]:
        """(flo, fhi, lo_attained, hi_attained) for the mapped jump factor."""
        lo, hi = self.jump.support()
        flo, fhi = self.jump_map.f_range(lo, hi)
        if flo > fhi:
            flo, fhi = fhi, flo
        lo_att, hi_att = self.jump.endpoints_attained()
        return (flo, fhi, lo_att, hi_att)

    def integrate_jump(
        self,
        g: Callable[[float], float],
        settings: QuadratureSettings = DEFAULT_QUADRATURE,
    ) -> float:
        """E[g(f(Y))] for this regime's mark law and jump map."""
        if self.jump_map.name == "identity":
            return self.jump.integrate(g, settings)
        fn = self.jump_map.fn
        return self.jump.integrate(lambda y: g(fn(y)), settings)

    def mean_jump_factor(self, settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
        """Expected relative jump size E[f(Y)]."""
        return mean_jump(self.jump, self.jump_map, settings)

    def exp_jump_mean(self, settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
        """E[e^{f(Y)}]; DivergenceError when the right tail is too heavy."""
        return exp_jump(self.jump, self.jump_map, settings)

    def admissible_fractions(self) -> "AdmissibleInterval":
        """Portfolio fractions keeping post-jump wealth positive in this regime."""
        flo, fhi, lo_att, hi_att = self.jump_image()
        # Lower bound: short positions die on a positive jump 1 + pi*f -> 0.
        if math.isinf(fhi):
            lo, lo_open = 0.0, False
        elif fhi > 0.0:
            lo, lo_open = -1.0 / fhi, hi_att
        else:
            lo, lo_open = -math.inf, True
        # Upper bound: long positions die on a crash jump.
        if flo < 0.0:
            hi, hi_open = -1.0 / flo, lo_att
        else:
            hi, hi_open = math.inf, True
        return AdmissibleInterval(lo=lo, hi=hi, lo_open=lo_open, hi_open=hi_open)


@dataclass(frozen=True)
class AdmissibleInterval:
    """Interval of admissible portfolio fractions, with open/closed ends."""

    lo: float
    hi: float
    lo_open: bool
    hi_open: bool

    def contains(self, x: float) -> bool:
        if self.lo_open:
            if x <= self.lo:
                return False
        elif x < self.lo:
            return False
        if self.hi_open:
            if x >= self.hi:
                return False
        elif x > self.hi:
            return False
        return True

    def __str__(self) -> str:
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


def _default_transition(m: int) -> tuple[tuple[float, ...], ...]:
    if m == 2:
        return ((0.0, 1.0), (1.0, 0.0))
    raise ConfigError(
        "transition matrix is required for more than two regimes",
        where="market.transition",
    )


@dataclass(frozen=True)
class MarketParams:
    """Full market: regimes, embedded switching matrix, horizon, spot."""

    regimes: tuple[RegimeSpec, ...]
    horizon: float
    transition: Optional[tuple[tuple[float, ...], ...]] = None
    s0: float = 1.0

    def __post_init__(self):
        if len(self.regimes) < 2:
            raise ConfigError("at least two regimes are required", where="market.regimes")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigError("horizon must be finite and > 0", where="market.horizon")
        if not (self.s0 > 0 and math.isfinite(self.s0)):
            raise ConfigError("initial price must be finite and > 0", where="market.s0")
        m = len(self.regimes)
        matrix = self.transition if self.transition is not None else _default_transition(m)
        if len(matrix) != m or any(len(row) != m for row in matrix):
            raise ConfigError(
                f"transition matrix must be {m}x{m}", where="market.transition"
            )
        for i, row in enumerate(matrix):
            if any(p < 0 or not math.isfinite(p) for p in row):
                raise ConfigError(
                    "transition probabilities must be finite and >= 0",
                    where=f"market.transition[{i}]",
                )
            if row[i] != 0.0:
                raise ConfigError(
                    "self-transitions are not allowed: every switch must "
                    "change the regime (diagonal entries must be exactly 0)",
                    where=f"market.transition[{i}][{i}]",
                )
            total = math.fsum(row)
            if abs(total - 1.0) > 1e-12:
                raise ConfigError(
                    f"transition row sums to {total!r}, not 1",
                    where=f"market.transition[{i}]",
                )
        if m == 2 and tuple(tuple(row) for row in matrix) != ((0.0, 1.0), (1.0, 0.0)):
            raise ConfigError(
                "with two regimes the chain must alternate deterministically "
                "(transition [[0, 1], [1, 0]])",
                where="market.transition",
            )
        object.__setattr__(self, "transition", tuple(tuple(row) for row in matrix))

    @property
    def n_regimes(self) -> int:
        return len(self.regimes)

    @property
    def alternating_two_regime(self) -> bool:
        """True when the chain is the deterministic two-regime flip-flop.

        Validation forces every two-regime market onto the alternating
        chain, so this is simply the two-regime case.  All closed-form
        moment and policy-value formulas require it.
        """
        return self.n_regimes == 2

    def require_alternating(self, what: str) -> None:
        if not self.alternating_two_regime:
            raise ConfigError(
                f"{what} requires exactly two regimes with deterministic "
                "alternation (the default transition matrix)",
                where="market.transition",
            )


# ----------------------------------------------------------------------
# Consumption rules and policies
# ----------------------------------------------------------------------

class ConsumptionRule:
    """Base for consumption rules; subclasses are frozen dataclasses."""

    kind: str = "abstract"

    def config_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class NoConsumption(ConsumptionRule):
    kind = "none"


@dataclass(frozen=True)
class ConstantRate(ConsumptionRule):
    """Consume at a fixed nonneg rate c per unit time (absolute, not a fraction)."""

    rate: float

    kind = "constant_rate"

    def __post_init__(self):
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise ConfigError("consumption rate must be finite and >= 0",
                              where="policy.consumption.rate")

    def config_dict(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class LogOptimalConsumption(ConsumptionRule):
    """Consume the consumption-free wealth path divided by (horizon + 1).

    Under this rule wealth satisfies V_t = V0_t * (1 - t/(T+1)) where V0 is
    the self-financing wealth from the same fractions, and the rule is the
    optimizer for logarithmic utility of consumption plus terminal wealth
    when paired with the log-optimal fractions.
    """

    kind = "log_optimal"


@dataclass(frozen=True)
class PowerOptimalConsumption(ConsumptionRule):
    """Deterministic-tilt rule optimal for fractional-power utility.

    Consumption is x/(T+1) times a piecewise exponential in time with
    per-regime exponent intensity * (1 - E[(1+pi*f)^alpha]) / alpha,
    times the product of (1 + pi*f) over past jumps.
    """

    alpha: float

    kind = "power_optimal"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)",
                              where="policy.consumption.alpha")

    def config_dict(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}


@dataclass(frozen=True)
class Policy:
    """Per-regime constant portfolio fractions plus a consumption rule."""

    fractions: tuple[float, ...]
    consumption: ConsumptionRule = NoConsumption()

    def __post_init__(self):
        if len(self.fractions) == 0:
            raise ConfigError("at least one fraction is required", where="policy.fractions")
        if any(not math.isfinite(p) for p in self.fractions):
            raise ConfigError("fractions must be finite", where="policy.fractions")


def validate_policy(market: MarketParams, policy: Policy) -> None:
    """Check fraction-count match and per-regime admissibility."""
    if len(policy.fractions) != market.n_regimes:
        raise ConfigError(
            f"policy has {len(policy.fractions)} fractions for "
            f"{market.n_regimes} regimes",
            where="policy.fractions",
        )
    for i, (pi, regime) in enumerate(zip(policy.fractions, market.regimes)):
        interval = regime.admissible_fractions()
        if not interval.contains(pi):
            raise ConfigError(
                f"fraction {pi:g} outside admissible interval {interval} "
                f"for regime {i}",
                where=f"policy.fractions[{i}]",
            )


@lru_cache(maxsize=256)
def _cached_mean_jump(regime: RegimeSpec, settings: QuadratureSettings) -> float:
    return regime.mean_jump_factor(settings)


@lru_cache(maxsize=256)
def _cached_exp_jump(regime: RegimeSpec, settings: QuadratureSettings) -> float:
    return regime.exp_jump_mean(settings)


def cached_mean_jump(regime: RegimeSpec,
                     settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
    return _cached_mean_jump(regime, settings)


def cached_exp_jump(regime: RegimeSpec,
                    settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
    return _cached_exp_jump(regime, settings)
