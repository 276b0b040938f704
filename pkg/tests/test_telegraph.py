"""Closed-form moment curves vs independent ODE integration."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jumptel.distributions import PointMass
from jumptel.market import MarketParams, RegimeSpec
from jumptel.telegraph import (
    compensated_martingale_mean,
    expected_mark_count,
    expected_occupation,
    telegraph_exp_moment,
    telegraph_mean,
    telegraph_mean_integral,
)

from oracles import (
    ode_exp_moment,
    ode_mean,
    ode_mean_integral,
    ode_occupation,
    random_two_regime_market,
    raw_mark_moment,
)


def _drifts(market):
    return tuple(reg.drift for reg in market.regimes)


def _raw_jump_means(market):
    return tuple(raw_mark_moment(reg.jump, lambda y: y) for reg in market.regimes)


def _raw_exp_jump_means(market):
    return tuple(raw_mark_moment(reg.jump, math.exp) for reg in market.regimes)


# ----------------------------------------------------------------------
# Against the ODE oracle
# ----------------------------------------------------------------------

def test_mean_matches_ode_oracle():
    rng = np.random.default_rng(42)
    for _ in range(8):
        market = random_two_regime_market(rng)
        t = float(rng.uniform(0.3, 5.0))
        means = _raw_jump_means(market)
        for start in (0, 1):
            closed = telegraph_mean(market, t, start)
            oracle = ode_mean(market, t, start, _drifts(market), means)
            assert closed == pytest.approx(oracle, rel=1e-9, abs=1e-11)


def test_mean_integral_matches_ode_oracle():
    rng = np.random.default_rng(43)
    for _ in range(6):
        market = random_two_regime_market(rng)
        t = float(rng.uniform(0.3, 5.0))
        means = _raw_jump_means(market)
        for start in (0, 1):
            closed = telegraph_mean_integral(market, t, start)
            oracle = ode_mean_integral(market, t, start, _drifts(market), means)
            assert closed == pytest.approx(oracle, rel=1e-9, abs=1e-11)


def test_exp_moment_matches_ode_oracle():
    rng = np.random.default_rng(44)
    for _ in range(8):
        market = random_two_regime_market(rng, bounded=True)
        t = float(rng.uniform(0.3, 5.0))
        phis = _raw_exp_jump_means(market)
        for start in (0, 1):
            closed = telegraph_exp_moment(market, t, start)
            oracle = ode_exp_moment(market, t, start, _drifts(market), phis)
            assert closed == pytest.approx(oracle, rel=1e-9)


def test_occupation_matches_ode_oracle_and_sums_to_t():
    rng = np.random.default_rng(45)
    for _ in range(6):
        market = random_two_regime_market(rng)
        t = float(rng.uniform(0.3, 5.0))
        for start in (0, 1):
            occ = expected_occupation(market, t, start)
            oracle = ode_occupation(market, t, start)
            assert occ[0] == pytest.approx(oracle[0], rel=1e-9, abs=1e-12)
            assert occ[1] == pytest.approx(oracle[1], rel=1e-9, abs=1e-12)
            assert occ[0] + occ[1] == pytest.approx(t, abs=1e-12)


# ----------------------------------------------------------------------
# Structural identities of the closed forms
# ----------------------------------------------------------------------

def test_identical_regimes_collapse_to_single_regime_formula():
    lam, c, y = 0.7, 0.05, 0.2
    reg = RegimeSpec(rate=0.01, drift=c, intensity=lam, jump=PointMass(y))
    market = MarketParams(regimes=(reg, reg), horizon=12.0)
    phi = math.exp(y)
    for t in (0.5, 2.0, 7.0):
        expected = math.exp(t * (c - lam + lam * phi))
        for start in (0, 1):
            got = telegraph_exp_moment(market, t, start)
            assert got == pytest.approx(expected, rel=1e-12)
        # Mean side: occupation-weighted tendency plus jump compensation.
        mean_expected = t * (c + lam * y)
        assert telegraph_mean(market, t, 0) == pytest.approx(mean_expected, rel=1e-12)


def test_compensated_mean_is_identically_zero():
    rng = np.random.default_rng(46)
    for _ in range(10):
        market = random_two_regime_market(rng)
        t = float(rng.uniform(0.1, 6.0))
        for start in (0, 1):
            assert abs(compensated_martingale_mean(market, t, start)) < 1e-12


def test_swap_of_regime_labels_and_start():
    rng = np.random.default_rng(47)
    market = random_two_regime_market(rng)
    swapped = MarketParams(
        regimes=(market.regimes[1], market.regimes[0]), horizon=market.horizon
    )
    for t in (0.4, 1.7, 4.2):
        assert telegraph_mean(market, t, 0) == pytest.approx(
            telegraph_mean(swapped, t, 1), rel=1e-13, abs=1e-15)
        assert telegraph_mean_integral(market, t, 1) == pytest.approx(
            telegraph_mean_integral(swapped, t, 0), rel=1e-13, abs=1e-15)


def test_zero_time_values():
    rng = np.random.default_rng(48)
    market = random_two_regime_market(rng)
    assert telegraph_mean(market, 0.0, 0) == 0.0
    assert telegraph_mean_integral(market, 0.0, 1) == 0.0
    assert telegraph_exp_moment(market, 0.0, 0) == 1.0
    assert expected_occupation(market, 0.0, 1) == (0.0, 0.0)


@given(
    lam0=st.floats(min_value=0.1, max_value=3.0),
    lam1=st.floats(min_value=0.1, max_value=3.0),
    t=st.floats(min_value=0.0, max_value=8.0),
    a0=st.floats(min_value=-2.0, max_value=2.0),
    a1=st.floats(min_value=-2.0, max_value=2.0),
    b0=st.floats(min_value=-2.0, max_value=2.0),
    b1=st.floats(min_value=-2.0, max_value=2.0),
    u0=st.floats(min_value=-1.0, max_value=1.0),
    u1=st.floats(min_value=-1.0, max_value=1.0),
)
def test_mean_is_linear_in_tendencies_and_jump_means(
    lam0, lam1, t, a0, a1, b0, b1, u0, u1
):
    market = MarketParams(
        regimes=(
            RegimeSpec(rate=0.0, drift=0.0, intensity=lam0, jump=PointMass(1.0)),
            RegimeSpec(rate=0.0, drift=0.0, intensity=lam1, jump=PointMass(1.0)),
        ),
        horizon=10.0,
    )
    parts = (
        telegraph_mean(market, t, 0, tendencies=(a0, a1), jump_means=(u0, u1))
        + telegraph_mean(market, t, 0, tendencies=(b0, b1), jump_means=(0.0, 0.0))
    )
    whole = telegraph_mean(
        market, t, 0, tendencies=(a0 + b0, a1 + b1), jump_means=(u0, u1)
    )
    assert whole == pytest.approx(parts, rel=1e-10, abs=1e-10)


def test_expected_mark_count_decomposes_over_occupation():
    rng = np.random.default_rng(49)
    market = random_two_regime_market(rng)
    t = 3.1
    for start in (0, 1):
        occ = expected_occupation(market, t, start)
        lam = [reg.intensity for reg in market.regimes]
        total = expected_mark_count(market, t, start)
        assert total == pytest.approx(lam[0] * occ[0] + lam[1] * occ[1], rel=1e-12)
        only0 = expected_mark_count(market, t, start, regime=0)
        assert only0 == pytest.approx(lam[0] * occ[0], rel=1e-12)
        lo, hi = -0.5, 0.25
        windowed = expected_mark_count(market, t, start, regime=1, interval=(lo, hi))
        p = market.regimes[1].jump.prob_interval(lo, hi)
        assert windowed == pytest.approx(lam[1] * occ[1] * p, rel=1e-12)
