"""Density processes, state-price densities, and the pathwise duality checks."""

import math
import pickle

import numpy as np
import pytest

from oracles import path_rng, raw_mark_moment

from jumptel.distributions import NegativePower, PositivePower
from jumptel.errors import ConfigError
from jumptel.market import MarketParams, RegimeSpec
from jumptel.mc import DensityTerminalFn, McJob, run
from jumptel.paths import self_financing_profile, simulate_regime_path
from jumptel.policies import solve_log_fractions, solve_power_fractions
from jumptel.tilts import (
    CustomTilt,
    LogOptimalTilt,
    PowerOptimalTilt,
    UnitTilt,
    budget_gap,
    density_profile,
    expected_density_terminal,
    martingale_residuals,
    state_price_profile,
    tilt_log_jump_values,
    tilt_means,
)

from conftest import POWER_ALPHA


def _w0(f):
    return 1.0 / (1.0 + 0.25 * f)


def _w1(f):
    return 1.0 / (1.0 + 0.4 * f)


def _paths(market, n, seed, start_regime=0):
    return [simulate_regime_path(market, path_rng(seed, k), start_regime=start_regime)
            for k in range(n)]


def test_tilt_means_vs_raw_quadrature(log_market):
    tilt = LogOptimalTilt((0.3, 0.7))
    means = tilt_means(log_market, tilt)
    for i, reg in enumerate(log_market.regimes):
        pi = tilt.fractions[i]
        want = raw_mark_moment(reg.jump, lambda y: 1.0 / (1.0 + pi * y))
        assert means[i] == pytest.approx(want, rel=1e-9)

    ptilt = PowerOptimalTilt((0.2, 0.5), alpha=0.45)
    pmeans = tilt_means(log_market, ptilt)
    for i, reg in enumerate(log_market.regimes):
        pi = ptilt.fractions[i]
        want = raw_mark_moment(reg.jump, lambda y: (1.0 + pi * y) ** (0.45 - 1.0))
        assert pmeans[i] == pytest.approx(want, rel=1e-9)

    assert tilt_means(log_market, UnitTilt()).tolist() == [1.0, 1.0]


def test_power_tilt_alpha_validation():
    with pytest.raises(ConfigError):
        PowerOptimalTilt((0.1, 0.1), alpha=1.0)
    with pytest.raises(ConfigError):
        PowerOptimalTilt((0.1, 0.1), alpha=-0.2)


def test_fraction_count_must_match_regimes(log_market):
    with pytest.raises(ConfigError):
        tilt_means(log_market, LogOptimalTilt((0.1, 0.2, 0.3)))


def test_density_profile_slopes_and_start(log_market):
    tilt = LogOptimalTilt((0.3, 0.7))
    means = tilt_means(log_market, tilt)
    path = _paths(log_market, 1, seed=3)[0]
    prof = density_profile(log_market, tilt, path)
    assert prof.l0 == 0.0
    lam = [reg.intensity for reg in log_market.regimes]
    for k, state in enumerate(np.concatenate(([path.start_regime], path.post_states))):
        assert prof.slopes[k] == pytest.approx(
            (1.0 - means[state]) * lam[state], rel=1e-13)


def test_state_price_discounts_by_the_riskless_account(log_market):
    tilt = LogOptimalTilt((0.3, 0.7))
    for k in range(5):
        path = simulate_regime_path(log_market, path_rng(11, k), start_regime=k % 2)
        dens = density_profile(log_market, tilt, path)
        spd = state_price_profile(log_market, tilt, path)
        occ = path.occupation(2)
        discount = (log_market.regimes[0].rate * occ[0]
                    + log_market.regimes[1].rate * occ[1])
        assert spd.terminal_level() == pytest.approx(
            dens.terminal_level() - discount, abs=1e-12)
        np.testing.assert_allclose(spd.jumps, dens.jumps, rtol=0, atol=0)


def test_custom_tilt_matches_specialized_log_tilt(log_market):
    custom = CustomTilt((_w0, _w1))
    ref = LogOptimalTilt((0.25, 0.4))
    np.testing.assert_allclose(
        tilt_means(log_market, custom), tilt_means(log_market, ref), rtol=1e-12)
    for k in range(4):
        path = simulate_regime_path(log_market, path_rng(19, k))
        got = tilt_log_jump_values(log_market, custom, path)
        want = tilt_log_jump_values(log_market, ref, path)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-15)


def test_tilts_pickle():
    for tilt in (UnitTilt(), LogOptimalTilt((0.3, 0.7)),
                 PowerOptimalTilt((0.2, 0.5), alpha=0.45),
                 CustomTilt((_w0, _w1))):
        clone = pickle.loads(pickle.dumps(tilt))
        assert clone.kind == tilt.kind


def test_martingale_residuals_vanish_at_log_solution(log_market):
    sol = solve_log_fractions(log_market)
    res = martingale_residuals(log_market, sol.tilt)
    np.testing.assert_allclose(res, 0.0, atol=1e-10)
    # and are visibly nonzero away from the solution
    off = martingale_residuals(log_market, LogOptimalTilt((0.2, 0.2)))
    assert np.abs(off).max() > 1e-3


def test_martingale_residuals_vanish_at_power_solution(power_market):
    sol = solve_power_fractions(power_market, POWER_ALPHA)
    assert sol.consistent
    res = martingale_residuals(power_market, sol.tilt)
    np.testing.assert_allclose(res, 0.0, atol=1e-9)


def test_log_state_price_is_pathwise_reciprocal_wealth(log_market):
    sol = solve_log_fractions(log_market)
    grid = np.linspace(0.0, log_market.horizon, 9)
    for k in range(12):
        path = simulate_regime_path(log_market, path_rng(23, k), start_regime=k % 2)
        h = state_price_profile(log_market, sol.tilt, path)
        v1 = self_financing_profile(log_market, sol.terminal_only_policy, path)
        total = (h.level_at(grid, event_times=path.times)
                 + v1.level_at(grid, event_times=path.times))
        assert np.abs(total).max() < 1e-12
        assert abs(h.terminal_level() + v1.terminal_level()) < 1e-12


def test_power_state_price_is_pathwise_wealth_power(power_market):
    alpha = POWER_ALPHA
    sol = solve_power_fractions(power_market, alpha)
    grid = np.linspace(0.0, power_market.horizon, 9)
    for k in range(12):
        path = simulate_regime_path(power_market, path_rng(29, k), start_regime=k % 2)
        h = state_price_profile(power_market, sol.tilt, path)
        v1 = self_financing_profile(power_market, sol.terminal_only_policy, path)
        diff = (h.level_at(grid, event_times=path.times)
                - (alpha - 1.0) * v1.level_at(grid, event_times=path.times))
        assert np.abs(diff).max() < 1e-12


def test_expected_density_terminal_is_identically_one(log_market, power_market):
    cases = [
        (log_market, LogOptimalTilt((0.3, 0.7))),
        (log_market, PowerOptimalTilt((0.2, 0.5), alpha=0.45)),
        (log_market, UnitTilt()),
        (power_market, LogOptimalTilt((-0.4, 0.6))),
    ]
    for market, tilt in cases:
        for t in (0.0, 0.7, market.horizon):
            for start in (0, 1):
                val = expected_density_terminal(market, tilt, t, start)
                assert val == pytest.approx(1.0, abs=1e-11)


def test_density_terminal_mc_agrees(log_market):
    tilt = LogOptimalTilt((0.3, 0.7))
    est = run(McJob(market=log_market, functional=DensityTerminalFn(tilt),
                    n_paths=4000, seed=101, start_regime=1))
    assert abs(est.mean - 1.0) <= 4.0 * est.stderr
    assert est.stderr > 0.0


def test_budget_gap_vanishes_pathwise_for_the_log_pair(log_market):
    sol = solve_log_fractions(log_market)
    for k in range(10):
        path = simulate_regime_path(log_market, path_rng(31, k), start_regime=k % 2)
        gap = budget_gap(log_market, sol.policy, sol.tilt, path, x0=1.6)
        assert abs(gap) < 1e-12
        # terminal-only wealth is priced exactly too: H V^1 = 1 pathwise
        gap_t = budget_gap(log_market, sol.terminal_only_policy, sol.tilt,
                           path, x0=1.6)
        assert abs(gap_t) < 1e-12


def test_budget_gap_is_nonzero_for_suboptimal_policies(log_market):
    from jumptel.market import NoConsumption, Policy

    sol = solve_log_fractions(log_market)
    off_policy = Policy(fractions=(0.1, 0.1), consumption=NoConsumption())
    gaps = []
    for k in range(10):
        path = simulate_regime_path(log_market, path_rng(37, k))
        gaps.append(budget_gap(log_market, off_policy, sol.tilt, path, x0=1.0))
    assert max(abs(g) for g in gaps) > 1e-4


def test_budget_gap_rejects_bad_wealth(log_market):
    sol = solve_log_fractions(log_market)
    path = simulate_regime_path(log_market, path_rng(41, 0))
    with pytest.raises(ConfigError):
        budget_gap(log_market, sol.policy, sol.tilt, path, x0=0.0)


def test_unit_tilt_density_is_constant_one(log_market):
    path = _paths(log_market, 1, seed=43)[0]
    prof = density_profile(log_market, UnitTilt(), path)
    assert prof.terminal_level() == 0.0
    assert np.all(prof.slopes == 0.0) and np.all(prof.jumps == 0.0)
