"""Exception hierarchy for the jumptel package.

Every error the library raises deliberately derives from JumptelError so
callers (and the HTTP service) can map failures to stable categories:

* ConfigError          -- invalid inputs / parameter validation, carries a field path
* NumericalError       -- quadrature, root finding, divergence, moment blow-ups
* ModelViolationError  -- a simulated path broke a model invariant (e.g. price factor <= 0)
* RuinError            -- wealth hit zero under a consumption rule
* ReproducibilityError -- a reproduction run did not match bit-for-bit
"""

from __future__ import annotations


class JumptelError(Exception):
    """Base class for all deliberate jumptel failures."""


class ConfigError(JumptelError):
    """Invalid configuration or parameter value.

    ``where`` is a dotted field path such as ``market.regimes[1].lambda``
    so CLI and service users can locate the offending entry.
    """

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class NumericalError(JumptelError):
    """Base class for numerical failures (root finding, quadrature, ...)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge; carries the last error estimate."""

    def __init__(self, message: str, error_estimate: float | None = None):
        self.error_estimate = error_estimate
        super().__init__(message)


class DivergenceError(NumericalError):
    """An integral or moment is divergent for the requested inputs."""


class NoRootError(NumericalError):
    """No sign change in the search interval; carries the endpoint values."""

    def __init__(self, message: str, lo: float, hi: float, g_lo: float, g_hi: float):
        self.lo, self.hi, self.g_lo, self.g_hi = lo, hi, g_lo, g_hi
        super().__init__(
            f"{message} (g({lo:g}) = {g_lo:g}, g({hi:g}) = {g_hi:g})"
        )


class ModelViolationError(JumptelError):
    """A path realized a state the model forbids (e.g. price factor <= 0)."""


class RuinError(JumptelError):
    """Wealth was driven to (or below) zero by the consumption stream."""


class ReproducibilityError(JumptelError):
    """A reproduction run disagreed with the original estimate."""

    def __init__(self, message: str, original: float, reproduced: float):
        self.original = original
        self.reproduced = reproduced
        super().__init__(f"{message}: original {original!r}, reproduced {reproduced!r}")
