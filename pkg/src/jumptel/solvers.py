"""Bracketing scalar root finder with reported brackets and residuals.

The solver contracts here return the bracket actually used alongside the
root, so callers can surface *why* a root was accepted (sign change located,
endpoints, final residual) in diagnostics and error messages.  The method is
the Illinois variant of regula falsi with a bisection fallback: guaranteed
bracket shrinkage, superlinear in practice, no derivative needed.  An
optional Newton polish with a supplied derivative pushes the residual to
machine level, which pathwise-identity checks downstream rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import NoRootError, NumericalError

__all__ = ["RootResult", "expand_bracket", "find_root", "newton_polish"]


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    bracket: tuple[float, float]
    iterations: int


def expand_bracket(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    limits: tuple[float, float] = (-math.inf, math.inf),
    grow: float = 1.6,
    max_expand: int = 80,
) -> tuple[float, float, float, float]:
    """Grow [lo, hi] geometrically inside ``limits`` until fn changes sign.

    Returns (lo, hi, fn(lo), fn(hi)).  Raises NoRootError if the limits are
    reached on both sides without a sign change.
    """
    if not lo < hi:
        raise NumericalError(f"invalid initial bracket [{lo}, {hi}]")
    lo = max(lo, limits[0])
    hi = min(hi, limits[1])
    f_lo = fn(lo)
    f_hi = fn(hi)
    for _ in range(max_expand):
        if f_lo == 0.0 or f_hi == 0.0 or (f_lo < 0.0) != (f_hi < 0.0):
            return lo, hi, f_lo, f_hi
        width = hi - lo
        lo_pinned = lo <= limits[0]
        hi_pinned = hi >= limits[1]
        if lo_pinned and hi_pinned:
            break
        # Extend the side whose endpoint value is smaller in magnitude: the
        # root, if any, is more likely just beyond it.
        extend_lo = (not lo_pinned) and (hi_pinned or abs(f_lo) <= abs(f_hi))
        if extend_lo:
            lo = max(lo - grow * width, limits[0])
            f_lo = fn(lo)
        else:
            hi = min(hi + grow * width, limits[1])
            f_hi = fn(hi)
    raise NoRootError(
        "no sign change found while expanding the bracket",
        lo=lo, hi=hi, g_lo=f_lo, g_hi=f_hi,
    )


def find_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: Optional[float] = None,
    f_hi: Optional[float] = None,
    xtol: float = 1e-15,
    max_iter: int = 200,
) -> RootResult:
    """Locate a root of fn in a sign-changing bracket [lo, hi]."""
    f_lo = fn(lo) if f_lo is None else f_lo
    f_hi = fn(hi) if f_hi is None else f_hi
    if f_lo == 0.0:
        return RootResult(lo, 0.0, (lo, hi), 0)
    if f_hi == 0.0:
        return RootResult(hi, 0.0, (lo, hi), 0)
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise NoRootError(
            "bracket endpoints have the same sign",
            lo=lo, hi=hi, g_lo=f_lo, g_hi=f_hi,
        )
    a, b, fa, fb = lo, hi, f_lo, f_hi
    side = 0
    x, fx = a, fa
    for it in range(1, max_iter + 1):
        denom = fb - fa
        if denom == 0.0 or not math.isfinite(denom):
            x = 0.5 * (a + b)
        else:
            x = (a * fb - b * fa) / denom
            # Keep strictly inside; fall back to bisection when the secant
            # point stalls at an endpoint.
            if not (a < x < b):
                x = 0.5 * (a + b)
        fx = fn(x)
        if fx == 0.0 or (b - a) <= xtol * max(1.0, abs(x)):
            return RootResult(x, fx, (a, b), it)
        if (fx < 0.0) == (fa < 0.0):
            a, fa = x, fx
            if side == -1:
                fb *= 0.5  # Illinois trick: halve the stale endpoint value
            side = -1
        else:
            b, fb = x, fx
            if side == 1:
                fa *= 0.5
            side = 1
    return RootResult(x, fx, (a, b), max_iter)


def newton_polish(
    fn: Callable[[float], float],
    deriv: Callable[[float], float],
    x: float,
    bracket: tuple[float, float],
    steps: int = 3,
) -> tuple[float, float]:
    """A few guarded Newton steps; returns the iterate with smallest |fn|."""
    lo, hi = bracket
    best_x, best_f = x, fn(x)
    cur_x, cur_f = best_x, best_f
    for _ in range(steps):
        d = deriv(cur_x)
        if d == 0.0 or not math.isfinite(d):
            break
        nxt = cur_x - cur_f / d
        if not (lo <= nxt <= hi) or not math.isfinite(nxt):
            break
        cur_x = nxt
        cur_f = fn(cur_x)
        if abs(cur_f) < abs(best_f):
            best_x, best_f = cur_x, cur_f
        if cur_f == 0.0:
            break
    return best_x, best_f
