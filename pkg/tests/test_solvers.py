"""Bracketing root-finder machinery used by the policy solvers."""

import math

import pytest

from jumptel.errors import NoRootError
from jumptel.solvers import RootResult, expand_bracket, find_root, newton_polish


def test_find_root_sqrt2():
    res = find_root(lambda x: x * x - 2.0, 0.0, 2.0)
    assert isinstance(res, RootResult)
    assert res.root == pytest.approx(math.sqrt(2.0), abs=1e-14)
    assert abs(res.residual) < 1e-13
    lo, hi = res.bracket
    assert lo <= res.root <= hi
    assert res.iterations >= 1


def test_find_root_accepts_precomputed_endpoint_values():
    fn = lambda x: math.expm1(x) - 0.5
    res = find_root(fn, -1.0, 1.0, f_lo=fn(-1.0), f_hi=fn(1.0))
    assert res.root == pytest.approx(math.log(1.5), abs=1e-14)


def test_find_root_endpoint_hit_short_circuits():
    res = find_root(lambda x: x * (x - 3.0), 0.0, 2.0)
    assert res.root == 0.0
    assert res.residual == 0.0


def test_find_root_requires_sign_change():
    with pytest.raises(NoRootError):
        find_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_find_root_steep_and_flat_functions():
    # steep: exp(40 x) - 1 has the root at 0 but huge curvature
    res = find_root(lambda x: math.expm1(40.0 * x), -1.0, 0.5)
    assert abs(res.root) < 1e-14
    # flat: cube root behaviour near the root
    res = find_root(lambda x: math.copysign(abs(x - 0.3) ** (1 / 3), x - 0.3),
                    -2.0, 2.0)
    assert res.root == pytest.approx(0.3, abs=1e-9)


def test_expand_bracket_grows_until_sign_change():
    fn = lambda x: x - 40.0
    lo, hi, f_lo, f_hi = expand_bracket(fn, 0.0, 1.0)
    assert f_lo < 0.0 < f_hi
    assert lo <= 40.0 <= hi
    # the returned values must actually be fn at the endpoints
    assert f_lo == fn(lo) and f_hi == fn(hi)


def test_expand_bracket_respects_limits():
    # No sign change inside the allowed window -> informative failure.
    with pytest.raises(NoRootError) as exc:
        expand_bracket(lambda x: x - 40.0, 0.0, 1.0, limits=(-5.0, 5.0))
    assert exc.value.lo >= -5.0 and exc.value.hi <= 5.0
    assert exc.value.g_lo is not None and exc.value.g_hi is not None


def test_expand_bracket_no_root_anywhere():
    with pytest.raises(NoRootError):
        expand_bracket(lambda x: 1.0 + math.tanh(x) ** 2, -1.0, 1.0,
                       limits=(-50.0, 50.0))


def test_newton_polish_improves_residual():
    fn = lambda x: x * x - 2.0
    deriv = lambda x: 2.0 * x
    rough = 1.41  # a few ulps short of sqrt(2)
    x, f = newton_polish(fn, deriv, rough, bracket=(1.0, 2.0))
    assert abs(f) <= abs(fn(rough))
    assert x == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_newton_polish_never_leaves_bracket():
    # A derivative estimate that would fling the iterate far away must be
    # rejected in favour of the best in-bracket point.
    fn = lambda x: x ** 3 - 2.0
    bad_deriv = lambda x: 1e-9
    x, f = newton_polish(fn, bad_deriv, 1.26, bracket=(1.0, 1.5))
    assert 1.0 <= x <= 1.5
    assert abs(f) <= abs(fn(1.26))
