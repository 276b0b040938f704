"""Mark distributions for regime-switching jump processes.

Four families are shipped:

* ``NegativePower(eta)``  -- density eta*(1+y)^(eta-1) on (-1, 0); ln(1+Y) is
  -Exponential(eta), so sampling is the exact inverse transform Y = e^(-E/eta) - 1.
* ``PositivePower(eta)``  -- density eta*(1+y)^(-(eta+1)) on (0, inf), eta > 1;
  ln(1+Y) is Exponential(eta), Y = e^(E/eta) - 1.
* ``PointMass(y)``        -- a single deterministic mark y != 0.
* ``Discrete(ys, ps)``    -- finitely many marks with positive weights.

Expectations against the two continuous families are computed after the
substitution v = -ln(1+y) (negative side) or v = ln(1+y) (positive side),
which turns every integral into an exponential-weight integral on (0, inf):

    E[g(Y)] = int_0^inf g(e^{-v} - 1) * eta * e^{-eta v} dv      (negative side)
    E[g(Y)] = int_0^inf g(e^{ v} - 1) * eta * e^{-eta v} dv      (positive side)

so the integrand has no endpoint singularity and adaptive quadrature
(QUADPACK via scipy) converges fast.  Divergent integrands (e.g. E[e^Y] for
the positive-power family) are detected by probing the transformed integrand
along a geometric tail ladder before quadrature runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, DivergenceError, QuadratureError

__all__ = [
    "QuadratureSettings",
    "MarkDistribution",
    "NegativePower",
    "PositivePower",
    "PointMass",
    "Discrete",
    "JumpMap",
    "IDENTITY_MAP",
    "jump_map_registry",
    "register_jump_map",
    "resolve_jump_map",
    "mean_jump",
    "exp_jump",
]


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances for adaptive quadrature on transformed mark integrals."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200


DEFAULT_QUADRATURE = QuadratureSettings()

# Tighter settings for quantities that feed pathwise identities, where the
# integral error multiplies lambda * horizon in an exponent.
TIGHT_QUADRATURE = QuadratureSettings(abs_tol=1e-14, rel_tol=1e-13, max_subdivisions=400)

# Tail ladder (in the transformed variable v) used to flag divergent
# integrands before quadrature runs.
_PROBE_LADDER = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0)


def _probe_tail(w: Callable[[float], float], rungs: Sequence[float]) -> None:
    """Raise DivergenceError when w(v) fails to decay along the tail ladder."""
    vals = []
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for v in rungs:
            try:
                val = float(w(v))
            except (OverflowError, FloatingPointError):
                raise DivergenceError(
                    "transformed integrand overflows on the tail; integral diverges"
                ) from None
            if math.isnan(val) or math.isinf(val):
                raise DivergenceError(
                    "transformed integrand is not finite on the tail; integral diverges"
                )
            vals.append(abs(val))
    tail = vals[-3:]
    if len(tail) == 3 and tail[-1] > 0.0 and tail[0] <= tail[1] <= tail[2]:
        raise DivergenceError(
            "transformed integrand does not decay (unbounded partial sums); "
            "integral diverges"
        )


def _quad_exponential(
    payload: Callable[[float], float], eta: float, settings: QuadratureSettings
) -> float:
    """Integrate payload(v) * eta * exp(-eta v) over (0, inf).

    The weight is applied here rather than in the caller so that the tail can
    be cut off exactly where exp(-eta v) underflows: past that point the true
    contribution of any integrable payload is below double precision, while
    evaluating the payload itself (which typically involves expm1(+-v)) would
    overflow or divide by zero.  Payload singularities inside the live range
    surface as +inf and are caught by the divergence probe.
    """

    def w(v: float) -> float:
        weight = eta * math.exp(-eta * v)
        if weight == 0.0:
            return 0.0
        try:
            val = payload(v)
        except (ZeroDivisionError, OverflowError, ValueError):
            return math.inf
        return val * weight

    # Only probe rungs where the weight is alive; trailing hard zeros carry
    # no information about decay.
    live = [v for v in _PROBE_LADDER if eta * v < 700.0]
    _probe_tail(w, live)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = quad(
            w,
            0.0,
            np.inf,
            epsabs=settings.abs_tol,
            epsrel=settings.rel_tol,
            limit=settings.max_subdivisions,
            full_output=1,
        )
    value, abserr = out[0], out[1]
    if math.isnan(value) or math.isinf(value):
        raise DivergenceError("quadrature returned a non-finite value; integral diverges")
    if len(out) > 3:  # message present => ier != 0
        # Round-off-limited results can still be well inside tolerance; only
        # fail when the reported error estimate is actually out of tolerance.
        if abserr > max(settings.abs_tol, settings.rel_tol * abs(value)) * 100.0:
            raise QuadratureError(
                f"quadrature did not converge: {out[3].splitlines()[0]}",
                error_estimate=abserr,
            )
    return value


class MarkDistribution:
    """Base class for mark distributions.  Subclasses are frozen dataclasses."""

    kind: str = "abstract"

    # -- support and probabilities -------------------------------------
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, y: float) -> float:
        raise NotImplementedError

    def endpoints_attained(self) -> tuple[bool, bool]:
        """Whether the support endpoints carry mass (atoms do, densities don't)."""
        raise NotImplementedError

    def prob_interval(self, lo: float, hi: float) -> float:
        """P(lo < Y <= hi).  Matches the half-open counting convention."""
        if hi < lo:
            raise ConfigError("interval upper end below lower end", where="interval")
        return self.cdf(hi) - self.cdf(lo)

    # -- sampling --------------------------------------------------------
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n marks by exact inverse transform.

        The number and order of raw draws consumed from ``rng`` is a fixed
        function of ``n`` for each family, which the reproducibility
        contract of the Monte Carlo engine relies on.
        """
        raise NotImplementedError

    # -- expectations ------------------------------------------------------
    def integrate(
        self, g: Callable[[float], float], settings: QuadratureSettings = DEFAULT_QUADRATURE
    ) -> float:
        """E[g(Y)]; exact finite sums for PointMass/Discrete, quadrature otherwise."""
        raise NotImplementedError

    def mean(self) -> float:
        """E[Y] in closed form."""
        raise NotImplementedError

    def exp_mean(self, settings: QuadratureSettings = DEFAULT_QUADRATURE) -> float:
        """E[e^Y]; raises DivergenceError when the integral is infinite."""
        return self.integrate(math.exp, settings)

    def config_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class NegativePower(MarkDistribution):
    eta: float

    kind = "negative_power"

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError("eta must be finite and > 0", where="jump.eta")

    def support(self) -> tuple[float, float]:
        return (-1.0, 0.0)

    def cdf(self, y: float) -> float:
        if y <= -1.0:
            return 0.0
        if y >= 0.0:
            return 1.0
        return (1.0 + y) ** self.eta

    def endpoints_attained(self) -> tuple[bool, bool]:
        return (False, False)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        e = rng.standard_exponential(n)
        return np.expm1(-e / self.eta)

    def integrate(self, g, settings=DEFAULT_QUADRATURE) -> float:
        return _quad_exponential(lambda v: g(math.expm1(-v)), self.eta, settings)

    def mean(self) -> float:
        return -1.0 / (1.0 + self.eta)

    def config_dict(self) -> dict:
        return {"kind": self.kind, "eta": self.eta}


@dataclass(frozen=True)
class PositivePower(MarkDistribution):
    eta: float

    kind = "positive_power"

    def __post_init__(self):
        if not (self.eta > 1 and math.isfinite(self.eta)):
            raise ConfigError(
                "eta must be finite and > 1 (the mark mean is infinite otherwise)",
                where="jump.eta",
            )

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def cdf(self, y: float) -> float:
        if y <= 0.0:
            return 0.0
        return 1.0 - (1.0 + y) ** (-self.eta)

    def endpoints_attained(self) -> tuple[bool, bool]:
        return (False, False)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        e = rng.standard_exponential(n)
        return np.expm1(e / self.eta)

    def integrate(self, g, settings=DEFAULT_QUADRATURE) -> float:
        return _quad_exponential(lambda v: g(math.expm1(v)), self.eta, settings)

    def mean(self) -> float:
        return 1.0 / (self.eta - 1.0)

    def config_dict(self) -> dict:
        return {"kind": self.kind, "eta": self.eta}


@dataclass(frozen=True)
class PointMass(MarkDistribution):
    y: float

    kind = "point_mass"

    def __post_init__(self):
        if self.y == 0.0 or not math.isfinite(self.y):
            raise ConfigError("point mass must be finite and nonzero", where="jump.y")

    def support(self) -> tuple[float, float]:
        return (self.y, self.y)

    def cdf(self, y: float) -> float:
        return 1.0 if y >= self.y else 0.0

    def endpoints_attained(self) -> tuple[bool, bool]:
        return (True, True)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # Deterministic: consumes no draws from the stream.
        return np.full(n, self.y)

    def integrate(self, g, settings=DEFAULT_QUADRATURE) -> float:
        return float(g(self.y))

    def mean(self) -> float:
        return self.y

    def config_dict(self) -> dict:
        return {"kind": self.kind, "y": self.y}


@dataclass(frozen=True)
class Discrete(MarkDistribution):
    ys: tuple[float, ...]
    ps: tuple[float, ...]

    kind = "discrete"

    def __post_init__(self):
        if len(self.ys) == 0 or len(self.ys) != len(self.ps):
            raise ConfigError("ys and ps must be nonempty and equal length", where="jump")
        if any(not math.isfinite(y) for y in self.ys):
            raise ConfigError("marks must be finite", where="jump.ys")
        if any(p <= 0 for p in self.ps):
            raise ConfigError("weights must be positive", where="jump.ps")
        total = math.fsum(self.ps)
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"weights sum to {total!r}, not 1", where="jump.ps")

    def support(self) -> tuple[float, float]:
        return (min(self.ys), max(self.ys))

    def cdf(self, y: float) -> float:
        return math.fsum(p for yk, p in zip(self.ys, self.ps) if yk <= y)

    def endpoints_attained(self) -> tuple[bool, bool]:
        return (True, True)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        order = np.argsort(np.asarray(self.ys), kind="stable")
        ys = np.asarray(self.ys)[order]
        cum = np.cumsum(np.asarray(self.ps)[order])
        idx = np.searchsorted(cum, u, side="right")
        return ys[np.minimum(idx, len(ys) - 1)]

    def integrate(self, g, settings=DEFAULT_QUADRATURE) -> float:
        return math.fsum(p * g(y) for y, p in zip(self.ys, self.ps))

    def mean(self) -> float:
        return math.fsum(p * y for y, p in zip(self.ys, self.ps))

    def config_dict(self) -> dict:
        return {"kind": self.kind, "ys": list(self.ys), "ps": list(self.ps)}


# ----------------------------------------------------------------------
# Jump maps
# ----------------------------------------------------------------------

def _identity(y: float) -> float:
    return y


def _identity_range(lo: float, hi: float) -> tuple[float, float]:
    return (lo, hi)


@dataclass(frozen=True)
class JumpMap:
    """A map f applied to raw marks; f must land in (-1, inf) \\ {0}.

    ``f_range`` maps a support interval to the (closure of the) image
    interval, used for admissibility checks of portfolio fractions.
    Callables must be module-level functions so specs stay picklable.
    """

    name: str
    fn: Callable[[float], float]
    f_range: Callable[[float, float], tuple[float, float]]


IDENTITY_MAP = JumpMap("identity", _identity, _identity_range)

_JUMP_MAPS: dict[str, JumpMap] = {"identity": IDENTITY_MAP}


def jump_map_registry() -> dict[str, JumpMap]:
    return dict(_JUMP_MAPS)


def register_jump_map(jump_map: JumpMap) -> None:
    if jump_map.name in _JUMP_MAPS:
        raise ConfigError(f"jump map {jump_map.name!r} already registered", where="jump_map")
    _JUMP_MAPS[jump_map.name] = jump_map


def resolve_jump_map(name_or_map: "str | JumpMap") -> JumpMap:
    if isinstance(name_or_map, JumpMap):
        return name_or_map
    try:
        return _JUMP_MAPS[name_or_map]
    except KeyError:
        raise ConfigError(
            f"unknown jump map {name_or_map!r}; registered: {sorted(_JUMP_MAPS)}",
            where="jump_map",
        ) from None


# ----------------------------------------------------------------------
# Jump functionals (distribution composed with a jump map)
# ----------------------------------------------------------------------

def mean_jump(
    dist: MarkDistribution,
    jump_map: JumpMap = IDENTITY_MAP,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[f(Y)]; closed form when f is the identity."""
    if jump_map.name == "identity":
        return dist.mean()
    return dist.integrate(jump_map.fn, settings)


def exp_jump(
    dist: MarkDistribution,
    jump_map: JumpMap = IDENTITY_MAP,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """E[e^{f(Y)}]; raises DivergenceError when infinite (heavy right tails)."""
    if jump_map.name == "identity":
        if isinstance(dist, PointMass):
            return math.exp(dist.y)
        if isinstance(dist, Discrete):
            return math.fsum(p * math.exp(y) for y, p in zip(dist.ys, dist.ps))
        return dist.exp_mean(settings)
    fn = jump_map.fn
    return dist.integrate(lambda y: math.exp(fn(y)), settings)
