"""Market/regime validation, admissible exposure intervals, policies."""

import math

import pytest

from jumptel.distributions import Discrete, NegativePower, PointMass, PositivePower
from jumptel.errors import ConfigError
from jumptel.market import (
    ConstantRate,
    LogOptimalConsumption,
    MarketParams,
    NoConsumption,
    Policy,
    PowerOptimalConsumption,
    RegimeSpec,
    cached_mean_jump,
    validate_policy,
)


def _reg(**kw):
    base = dict(rate=0.01, drift=0.05, intensity=0.5, jump=PointMass(0.2))
    base.update(kw)
    return RegimeSpec(**base)


# ----------------------------------------------------------------------
# RegimeSpec
# ----------------------------------------------------------------------

def test_regime_rejects_nonpositive_intensity():
    with pytest.raises(ConfigError):
        _reg(intensity=0.0)
    with pytest.raises(ConfigError):
        _reg(intensity=-1.0)


def test_regime_rejects_nonfinite_coefficients():
    with pytest.raises(ConfigError):
        _reg(rate=math.nan)
    with pytest.raises(ConfigError):
        _reg(drift=math.inf)


def test_regime_allows_negative_rate():
    reg = _reg(rate=-0.02)
    assert reg.rate == -0.02


def test_regime_rejects_jump_factors_at_or_below_ruin():
    with pytest.raises(ConfigError):
        _reg(jump=PointMass(-1.0))
    with pytest.raises(ConfigError):
        _reg(jump=Discrete((-1.5, 0.2), (0.5, 0.5)))


def test_jump_image_identity_map():
    reg = _reg(jump=NegativePower(1.5))
    lo, hi, lo_att, hi_att = reg.jump_image()
    assert (lo, hi) == (-1.0, 0.0)
    assert not lo_att and not hi_att


def test_cached_mean_jump_matches_direct():
    reg = _reg(jump=PositivePower(2.5))
    assert cached_mean_jump(reg) == pytest.approx(reg.mean_jump_factor(), abs=1e-15)


# ----------------------------------------------------------------------
# Admissible fraction intervals
# ----------------------------------------------------------------------

def test_admissible_interval_negative_power():
    adm = _reg(jump=NegativePower(1.5)).admissible_fractions()
    # Factors live in (-1, 0): any short position is safe, long exposure
    # up to 1 keeps wealth positive.
    assert adm.contains(0.0)
    assert adm.contains(-25.0)
    assert adm.contains(0.99)
    assert not adm.contains(1.5)


def test_admissible_interval_positive_power():
    adm = _reg(jump=PositivePower(2.5)).admissible_fractions()
    # Unbounded upside: no finite bound above, but shorting risks ruin.
    assert adm.contains(0.0)
    assert adm.contains(3.0)
    assert not adm.contains(-0.05)


def test_admissible_interval_point_mass():
    adm = _reg(jump=PointMass(-0.5)).admissible_fractions()
    # 1 + 2 * (-0.5) = 0 would hit ruin exactly, and the atom is attained.
    assert adm.contains(1.99)
    assert not adm.contains(2.0)
    assert adm.contains(-100.0)


def test_admissible_interval_discrete_two_sided():
    adm = _reg(jump=Discrete((-0.2, 0.35), (0.4, 0.6))).admissible_fractions()
    assert adm.contains(4.99) and not adm.contains(5.0)
    assert adm.contains(-2.85) and not adm.contains(-1.0 / 0.35)


def test_admissible_interval_str_is_interval_notation():
    text = str(_reg(jump=NegativePower(1.0)).admissible_fractions())
    assert text.startswith("(") or text.startswith("[")
    assert "," in text


# ----------------------------------------------------------------------
# MarketParams
# ----------------------------------------------------------------------

def test_market_requires_positive_horizon():
    with pytest.raises(ConfigError):
        MarketParams(regimes=(_reg(), _reg()), horizon=0.0)
    with pytest.raises(ConfigError):
        MarketParams(regimes=(_reg(), _reg()), horizon=-1.0)


def test_market_requires_at_least_two_regimes():
    with pytest.raises(ConfigError):
        MarketParams(regimes=(_reg(),), horizon=1.0)


def test_market_rejects_positive_initial_price_violations():
    with pytest.raises(ConfigError):
        MarketParams(regimes=(_reg(), _reg()), horizon=1.0, s0=0.0)


def test_two_regime_transition_must_alternate():
    with pytest.raises(ConfigError):
        MarketParams(
            regimes=(_reg(), _reg()),
            horizon=1.0,
            transition=((0.5, 0.5), (1.0, 0.0)),
        )


def test_default_transition_is_alternating():
    market = MarketParams(regimes=(_reg(), _reg()), horizon=1.0)
    assert market.transition == ((0.0, 1.0), (1.0, 0.0))
    assert market.alternating_two_regime
    market.require_alternating("test")  # does not raise


# ----------------------------------------------------------------------
# Policies
# ----------------------------------------------------------------------

def test_policy_validation_against_admissible_interval():
    market = MarketParams(
        regimes=(_reg(jump=NegativePower(1.5)), _reg(jump=PositivePower(2.5))),
        horizon=1.0,
    )
    validate_policy(market, Policy(fractions=(-0.5, 0.5)))
    with pytest.raises(ConfigError):
        validate_policy(market, Policy(fractions=(2.0, 0.5)))
    with pytest.raises(ConfigError):
        validate_policy(market, Policy(fractions=(-0.5, -0.5)))
    with pytest.raises(ConfigError):
        validate_policy(market, Policy(fractions=(-0.5,)))


def test_consumption_rule_validation():
    with pytest.raises(ConfigError):
        ConstantRate(-0.1)
    with pytest.raises(ConfigError):
        PowerOptimalConsumption(alpha=1.0)
    with pytest.raises(ConfigError):
        PowerOptimalConsumption(alpha=0.0)
    assert NoConsumption().config_dict()["kind"] == "none"
    assert LogOptimalConsumption().config_dict()["kind"] == "log_optimal"
    assert ConstantRate(0.3).config_dict()["rate"] == 0.3
