import math

import mpmath
import numpy as np
import pytest

from lognsum import DomainError, lambert_w

from oracles import w_bisect


def test_zero_and_e():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == pytest.approx(1.0, rel=1e-15)


def test_table_argument_matches_bisection():
    a = 23.1845282 * 0.25 ** 2
    w = lambert_w(a)
    assert w == pytest.approx(w_bisect(a), rel=1e-14)
    assert w * math.exp(w) == pytest.approx(1.4490330125, rel=1e-12)


def test_round_trip_dense_grid():
    a = np.logspace(-12, 12, 10 ** 6)
    w = lambert_w(a)
    err = np.abs(w * np.exp(w) - a) / np.maximum(a, 1.0)
    assert err.max() <= 1e-13
    assert np.all(w >= 0)


def test_scalar_path_round_trip():
    for a in np.logspace(-12, 12, 2000):
        w = lambert_w(float(a))
        assert abs(w * math.exp(w) - a) <= 1e-13 * max(a, 1.0)


def test_agrees_with_bisection_and_mpmath():
    rng = np.random.default_rng(11)
    pts = 10.0 ** rng.uniform(-12, 12, 1000)
    for a in pts:
        w = lambert_w(float(a))
        assert w == pytest.approx(w_bisect(float(a)), rel=1e-12)
    for a in pts[:100]:
        assert lambert_w(float(a)) == pytest.approx(float(mpmath.lambertw(a).real), rel=1e-14)


def test_array_matches_scalar():
    a = np.array([0.0, 1e-300, 1e-8, 0.5, math.e, 3.0, 1e5, 1e300])
    got = lambert_w(a)
    assert got.shape == a.shape
    for ai, gi in zip(a, got):
        assert gi == pytest.approx(lambert_w(float(ai)), rel=1e-15, abs=0)


def test_monotone():
    w = lambert_w(np.logspace(-10, 10, 5001))
    assert np.all(np.diff(w) > 0)


def test_first_order_asymptotics():
    a = 1e10
    la = math.log(a)
    assert abs(lambert_w(a) / (la - math.log(la)) - 1.0) < 0.05


@pytest.mark.parametrize("bad", [-1e-300, -1.0, math.inf, math.nan])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        lambert_w(bad)


def test_domain_error_array():
    with pytest.raises(DomainError):
        lambert_w(np.array([1.0, -2.0]))
