"""Shared fixtures and the acceptance-line reporter.

The acceptance tests in test_acceptance.py each record one summary line via
the ``criterion`` fixture; a terminal-summary hook prints them as a block at
the end of the run, one PASS/FAIL line per numbered criterion, including a
FAIL line for any criterion whose test crashed before recording.
"""

from __future__ import annotations

import re

import pytest
from hypothesis import HealthCheck, settings as hyp_settings

from jumptel.distributions import Discrete, NegativePower, PointMass, PositivePower
from jumptel.market import MarketParams, RegimeSpec

hyp_settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
hyp_settings.load_profile("suite")


# ----------------------------------------------------------------------
# Reference markets
# ----------------------------------------------------------------------

#: Log-optimal fractions the log market below was constructed to produce.
LOG_TARGETS = (-0.5, 0.5)

#: Exponent and fractions the power market below was constructed to produce.
POWER_ALPHA = 0.3
POWER_TARGETS = (-0.5, 0.5)


def make_log_market() -> MarketParams:
    """Two-regime market whose log-optimal fractions are exactly LOG_TARGETS
    (drifts back-computed from the first-order condition at the targets)."""
    return MarketParams(
        regimes=(
            RegimeSpec(rate=0.01, drift=0.1041316199748897, intensity=0.3,
                       jump=NegativePower(1.5)),
            RegimeSpec(rate=0.01, drift=-0.4395559215387595, intensity=1.2,
                       jump=PositivePower(2.5)),
        ),
        horizon=2.0,
    )


def make_power_market() -> MarketParams:
    """Market planted so both power-utility conditions (alpha = POWER_ALPHA)
    hold jointly at POWER_TARGETS: rates solved from the consumption
    condition, drifts set to the consistent values."""
    return MarketParams(
        regimes=(
            RegimeSpec(rate=-0.0032598011256151915, drift=0.0826920603177353,
                       intensity=0.3, jump=NegativePower(2.0)),
            RegimeSpec(rate=-0.00830988246219988, drift=-0.13006126809605317,
                       intensity=1.2, jump=Discrete((-0.2, 0.35), (0.4, 0.6))),
        ),
        horizon=2.0,
    )


@pytest.fixture(scope="session")
def log_market() -> MarketParams:
    return make_log_market()


@pytest.fixture(scope="session")
def power_market() -> MarketParams:
    return make_power_market()


@pytest.fixture(scope="session")
def bounded_market() -> MarketParams:
    """Bounded jump factors in both regimes, so every exponential moment of
    the mark-sum functional is finite."""
    return MarketParams(
        regimes=(
            RegimeSpec(rate=0.01, drift=0.08, intensity=0.3,
                       jump=PointMass(-0.3)),
            RegimeSpec(rate=0.01, drift=-0.1, intensity=1.2,
                       jump=NegativePower(1.5)),
        ),
        horizon=10.0,
    )


@pytest.fixture(scope="session")
def mean_market() -> MarketParams:
    """Mixed-sign marks over a long horizon, for first-moment checks."""
    return MarketParams(
        regimes=(
            RegimeSpec(rate=0.01, drift=0.08, intensity=0.3,
                       jump=NegativePower(1.5)),
            RegimeSpec(rate=0.01, drift=-0.1, intensity=1.2,
                       jump=PositivePower(2.5)),
        ),
        horizon=10.0,
    )


# ----------------------------------------------------------------------
# Acceptance-line bookkeeping
# ----------------------------------------------------------------------

_RESULTS: dict[int, tuple[bool, str]] = {}
_COLLECTED: set[int] = set()
_CRITERION_RE = re.compile(r"test_criterion_0*(\d+)")


def pytest_collection_modifyitems(items):
    for item in items:
        m = _CRITERION_RE.search(item.name)
        if m:
            _COLLECTED.add(int(m.group(1)))


@pytest.fixture
def criterion():
    """Record ``(number, passed, detail)`` for the end-of-run summary block,
    then assert so the test itself fails loudly too."""

    def record(number: int, passed: bool, detail: str) -> None:
        _RESULTS[number] = (bool(passed), detail)
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _COLLECTED:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_COLLECTED):
        if n in _RESULTS:
            passed, detail = _RESULTS[n]
            status = "PASS" if passed else "FAIL"
        else:
            status, detail = "FAIL", "test did not run to completion"
        terminalreporter.write_line(f"[{status}] criterion {n}: {detail}")
