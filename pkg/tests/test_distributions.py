"""Mark distribution families: sampling law, moments, divergence detection."""

import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from jumptel.distributions import (
    Discrete,
    IDENTITY_MAP,
    JumpMap,
    NegativePower,
    PointMass,
    PositivePower,
    exp_jump,
    jump_map_registry,
    mean_jump,
    register_jump_map,
    resolve_jump_map,
)
from jumptel.errors import ConfigError, DivergenceError

from oracles import factor_power_moment, path_rng, raw_mark_moment


# ----------------------------------------------------------------------
# Construction and validation
# ----------------------------------------------------------------------

@pytest.mark.parametrize("bad", [0.0, -1.5, math.inf, math.nan])
def test_negative_power_rejects_bad_eta(bad):
    with pytest.raises(ConfigError):
        NegativePower(bad)


@pytest.mark.parametrize("bad", [1.0, 0.5, -2.0, math.inf])
def test_positive_power_rejects_eta_at_most_one(bad):
    with pytest.raises(ConfigError):
        PositivePower(bad)


def test_point_mass_rejects_zero_and_nonfinite():
    with pytest.raises(ConfigError):
        PointMass(0.0)
    with pytest.raises(ConfigError):
        PointMass(math.inf)


def test_discrete_validation():
    with pytest.raises(ConfigError):
        Discrete((), ())
    with pytest.raises(ConfigError):
        Discrete((0.1, 0.2), (0.5,))
    with pytest.raises(ConfigError):
        Discrete((0.1, 0.2), (0.6, 0.6))  # weights do not sum to 1
    with pytest.raises(ConfigError):
        Discrete((0.1, 0.2), (1.2, -0.2))  # nonpositive weight
    d = Discrete((-0.2, 0.35), (0.4, 0.6))
    assert d.support() == (-0.2, 0.35)


# ----------------------------------------------------------------------
# Closed-form moments vs quadrature vs raw-space oracle
# ----------------------------------------------------------------------

def test_negative_power_mean_closed_form():
    d = NegativePower(1.5)
    assert d.mean() == -1.0 / 2.5
    assert abs(d.integrate(lambda y: y) - d.mean()) < 1e-13


def test_positive_power_mean_closed_form():
    d = PositivePower(2.5)
    assert d.mean() == 1.0 / 1.5
    assert abs(d.integrate(lambda y: y) - d.mean()) < 1e-12


@pytest.mark.parametrize("eta", [0.7, 1.5, 3.0])
@pytest.mark.parametrize("p", [0.3, 1.0, 2.0])
def test_negative_power_factor_moments(eta, p):
    d = NegativePower(eta)
    expected = factor_power_moment(d, p)
    got = d.integrate(lambda y: (1.0 + y) ** p)
    assert got == pytest.approx(expected, rel=1e-11)


def test_negative_power_refuses_integrands_singular_at_minus_one():
    # E[(1+Y)^p] for p in (-eta, 0) is finite, but the integrand blows up at
    # the support edge; the engine refuses rather than risking a junk value.
    # Its callers only ever need such exponents at interior points
    # 1 + pi*y with pi < 1, which stay bounded.
    d = NegativePower(1.5)
    with pytest.raises(DivergenceError):
        d.integrate(lambda y: (1.0 + y) ** -0.5)
    with pytest.raises(DivergenceError):
        d.integrate(math.log1p)
    # the same exponent applied strictly inside the support is fine
    got = d.integrate(lambda y: (1.0 + 0.8 * y) ** -0.5)
    want = raw_mark_moment(d, lambda y: (1.0 + 0.8 * y) ** -0.5)
    assert got == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("eta", [1.5, 2.5, 4.0])
@pytest.mark.parametrize("p", [-2.0, -0.7, 0.5, 1.0])
def test_positive_power_factor_moments(eta, p):
    if p >= eta:
        pytest.skip("moment infinite")
    d = PositivePower(eta)
    expected = factor_power_moment(d, p)
    got = d.integrate(lambda y: (1.0 + y) ** p)
    assert got == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("dist", [
    NegativePower(1.5),
    NegativePower(0.8),
    PositivePower(2.5),
    PositivePower(1.6),
])
def test_integrate_matches_raw_space_quadrature(dist):
    # A payload with no special structure, integrated through two different
    # substitutions/routines.
    g = lambda y: y / (2.0 + y) + 1.0 / (1.0 + y * y)
    assert dist.integrate(g) == pytest.approx(raw_mark_moment(dist, g), rel=1e-9)


def test_log_factor_mean_is_reciprocal_eta():
    # ln(1+Y) is exactly +-Exp(eta) under the two power families.
    assert PositivePower(2.0).integrate(math.log1p) == pytest.approx(0.5, rel=1e-12)
    got = NegativePower(2.0).integrate(lambda y: math.log1p(0.9 * y))
    want = raw_mark_moment(NegativePower(2.0), lambda y: math.log1p(0.9 * y))
    assert got == pytest.approx(want, rel=1e-10)


def test_discrete_and_point_mass_moments_are_exact_sums():
    d = Discrete((-0.2, 0.35), (0.4, 0.6))
    assert d.mean() == pytest.approx(-0.2 * 0.4 + 0.35 * 0.6, abs=1e-16)
    assert d.integrate(lambda y: y * y) == pytest.approx(
        0.4 * 0.04 + 0.6 * 0.1225, abs=1e-16)
    p = PointMass(-0.3)
    assert p.mean() == -0.3
    assert p.integrate(math.exp) == math.exp(-0.3)


# ----------------------------------------------------------------------
# Divergence detection
# ----------------------------------------------------------------------

def test_positive_power_exponential_moment_diverges():
    with pytest.raises(DivergenceError):
        PositivePower(2.5).exp_mean()


def test_positive_power_moment_at_or_above_eta_diverges():
    d = PositivePower(2.5)
    with pytest.raises(DivergenceError):
        d.integrate(lambda y: (1.0 + y) ** 2.5)
    with pytest.raises(DivergenceError):
        d.integrate(lambda y: (1.0 + y) ** 3.0)


def test_negative_power_exponential_moment_is_finite():
    d = NegativePower(1.5)
    got = d.exp_mean()
    assert got == pytest.approx(raw_mark_moment(d, math.exp), rel=1e-10)
    assert math.exp(-1.0) < got < 1.0


def test_negative_power_moment_below_negative_eta_diverges():
    with pytest.raises(DivergenceError):
        NegativePower(1.5).integrate(lambda y: (1.0 + y) ** (-1.5))


# ----------------------------------------------------------------------
# CDF / interval probabilities
# ----------------------------------------------------------------------

def test_negative_power_cdf_and_interval():
    d = NegativePower(1.5)
    assert d.cdf(-0.5) == pytest.approx(0.5 ** 1.5)
    assert d.cdf(-1.0) == 0.0 and d.cdf(0.0) == 1.0
    assert d.prob_interval(-0.5, 0.0) == pytest.approx(1.0 - 0.5 ** 1.5)


def test_positive_power_cdf_and_interval():
    d = PositivePower(2.5)
    assert d.cdf(1.0) == pytest.approx(1.0 - 2.0 ** -2.5)
    assert d.prob_interval(0.0, 1.0) == pytest.approx(1.0 - 2.0 ** -2.5)
    assert d.prob_interval(1.0, math.inf) == pytest.approx(2.0 ** -2.5)


def test_discrete_cdf_is_right_continuous_step():
    d = Discrete((-0.2, 0.35), (0.4, 0.6))
    assert d.cdf(-0.2) == pytest.approx(0.4)
    assert d.cdf(-0.21) == 0.0
    assert d.cdf(0.35) == pytest.approx(1.0)
    # Half-open (lo, hi]: excludes the left endpoint's atom.
    assert d.prob_interval(-0.2, 0.35) == pytest.approx(0.6)


def test_prob_interval_rejects_reversed_bounds():
    with pytest.raises(ConfigError):
        NegativePower(1.0).prob_interval(0.5, -0.5)


# ----------------------------------------------------------------------
# Sampling law
# ----------------------------------------------------------------------

@pytest.mark.parametrize("dist,sign", [
    (NegativePower(1.5), -1.0),
    (NegativePower(0.8), -1.0),
    (PositivePower(2.5), +1.0),
    (PositivePower(1.6), +1.0),
])
def test_log_factor_of_power_samples_is_exponential(dist, sign):
    rng = path_rng(314, 0)
    y = dist.sample(rng, 20000)
    lo, hi = dist.support()
    assert np.all(y > lo) and np.all(y < hi if math.isfinite(hi) else True)
    z = sign * dist.eta * np.log1p(y)  # should be standard exponential
    ks = stats.kstest(z, "expon")
    assert ks.pvalue > 1e-3, f"KS p-value {ks.pvalue}"


def test_discrete_sampling_frequencies():
    d = Discrete((-0.2, 0.1, 0.35), (0.25, 0.25, 0.5))
    rng = path_rng(99, 1)
    y = d.sample(rng, 40000)
    assert set(np.unique(y)) == {-0.2, 0.1, 0.35}
    freq = np.mean(y == 0.35)
    assert abs(freq - 0.5) < 4.0 * math.sqrt(0.25 / 40000)


def test_sampling_is_reproducible_per_stream():
    d = NegativePower(1.5)
    a = d.sample(path_rng(7, 3), 50)
    b = d.sample(path_rng(7, 3), 50)
    assert np.array_equal(a, b)
    c = d.sample(path_rng(7, 4), 50)
    assert not np.array_equal(a, c)


def test_point_mass_sampling_consumes_no_draws():
    rng1 = path_rng(0, 0)
    PointMass(0.2).sample(rng1, 10)
    rng2 = path_rng(0, 0)
    assert rng1.random() == rng2.random()


@given(st.floats(min_value=0.3, max_value=4.0),
       st.integers(min_value=0, max_value=2 ** 31))
def test_negative_power_samples_stay_in_support(eta, seed):
    y = NegativePower(eta).sample(path_rng(seed, 0), 64)
    assert np.all(y > -1.0) and np.all(y < 0.0)


# ----------------------------------------------------------------------
# Jump maps
# ----------------------------------------------------------------------

def test_identity_map_registered_and_resolvable():
    assert resolve_jump_map("identity") is IDENTITY_MAP
    assert "identity" in jump_map_registry()
    assert resolve_jump_map(IDENTITY_MAP) is IDENTITY_MAP
    with pytest.raises(ConfigError):
        resolve_jump_map("no-such-map")


def test_register_jump_map_rejects_duplicates():
    with pytest.raises(ConfigError):
        register_jump_map(JumpMap("identity", lambda y: y, lambda lo, hi: (lo, hi)))


def test_mean_and_exp_jump_shortcuts():
    d = Discrete((-0.1, 0.2), (0.5, 0.5))
    assert mean_jump(d) == d.mean()
    assert exp_jump(d) == pytest.approx(
        0.5 * math.exp(-0.1) + 0.5 * math.exp(0.2), abs=1e-16)
    assert exp_jump(PointMass(0.4)) == math.exp(0.4)


def test_distributions_pickle_round_trip():
    for d in (NegativePower(1.5), PositivePower(2.5), PointMass(-0.3),
              Discrete((-0.2, 0.35), (0.4, 0.6))):
        assert pickle.loads(pickle.dumps(d)) == d
