import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from knninfo.special import EULER_GAMMA, digamma, log_gamma

mpmath.mp.dps = 40


def test_digamma_at_one_is_minus_euler_gamma():
    assert abs(digamma(1.0) + 0.57721566490153286) < 1e-14
    assert abs(digamma(1.0) + EULER_GAMMA) < 1e-14


def test_digamma_at_two():
    assert abs(digamma(2.0) - 0.42278433509846714) < 1e-14


def test_digamma_large_argument_against_asymptotic_series():
    t = 1000.0
    series = math.log(t) - 1 / (2 * t) - 1 / (12 * t ** 2) + 1 / (120 * t ** 4) - 1 / (252 * t ** 6)
    assert abs(digamma(t) - series) < 1e-10


@pytest.mark.parametrize("t", np.geomspace(1e-3, 1e7, 211))
def test_digamma_against_mpmath(t):
    ref = float(mpmath.digamma(mpmath.mpf(t)))
    assert abs(digamma(t) - ref) <= 1e-13 * max(1.0, abs(ref))


def test_digamma_array_matches_scalar():
    t = np.geomspace(0.01, 1e5, 50)
    vec = digamma(t)
    assert vec.shape == t.shape
    assert np.array_equal(vec, np.array([digamma(float(v)) for v in t]))


def test_digamma_recurrence_on_log_grid():
    t = np.geomspace(0.5, 1e6, 2000)
    err = np.abs(digamma(t + 1) - digamma(t) - 1 / t)
    assert err.max() <= 1e-12


def test_digamma_strictly_increasing():
    t = np.geomspace(1e-3, 1e8, 5000)
    assert np.all(np.diff(digamma(t)) > 0)


@pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, math.nan, math.inf])
def test_digamma_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        digamma(bad)


def test_digamma_rejects_nonpositive_in_array():
    with pytest.raises(ValueError):
        digamma(np.array([1.0, 0.0]))


def test_log_gamma_examples():
    assert log_gamma(1.0) == 0.0
    assert abs(log_gamma(0.5) - math.log(math.sqrt(math.pi))) < 1e-15
    assert abs(log_gamma(11.0) - math.log(3628800)) <= 1e-12 * math.log(3628800)


@pytest.mark.parametrize("t", np.concatenate([np.geomspace(1e-4, 1e8, 181),
                                              [0.999, 1.001, 1.5, 1.999, 2.0, 2.001]]))
def test_log_gamma_relative_error_against_mpmath(t):
    ref = mpmath.loggamma(mpmath.mpf(t))
    got = log_gamma(t)
    if ref == 0:
        assert got == 0.0
    else:
        assert abs(got - float(ref)) <= 1e-12 * abs(float(ref))


@given(st.floats(min_value=1e-3, max_value=1e6))
@settings(max_examples=300, deadline=None)
def test_log_gamma_recurrence(t):
    # ln Gamma(t + 1) = ln Gamma(t) + ln t
    lhs = log_gamma(t + 1)
    rhs = log_gamma(t) + math.log(t)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@given(st.floats(min_value=1e-3, max_value=1e6))
@settings(max_examples=300, deadline=None)
def test_digamma_recurrence_property(t):
    assert abs(digamma(t + 1) - digamma(t) - 1 / t) <= 1e-12 * max(1.0, 1 / t)


@pytest.mark.parametrize("bad", [0.0, -2.0, math.nan])
def test_log_gamma_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        log_gamma(bad)
