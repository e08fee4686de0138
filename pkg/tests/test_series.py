import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inner_dyn.errors import ConditioningWarning, DomainError, OrderMismatchError
from inner_dyn.series import (
    PowerSeries,
    factorial_series,
    series_compose,
    series_exp,
    series_from_samples,
    series_mobius,
    series_mul,
)


def poly(*c, order=8):
    out = np.zeros(order + 1, dtype=complex)
    out[: len(c)] = c
    return PowerSeries(out)


def test_mul_difference_of_squares():
    r = series_mul(poly(1, 1), poly(1, -1))
    assert np.array_equal(r.coeffs, poly(1, 0, -1).coeffs)


def test_mul_identity_and_monomial_power():
    a = poly(0.3, -1j, 2)
    assert np.array_equal(series_mul(a, poly(1)).coeffs, a.coeffs)
    z2 = PowerSeries.monomial(2, 10)
    r = series_mul(series_mul(z2, z2), z2)
    assert np.array_equal(r.coeffs, PowerSeries.monomial(6, 10).coeffs)


def test_mul_order_mismatch():
    with pytest.raises(OrderMismatchError):
        series_mul(poly(1, order=4), poly(1, order=5))


def test_exp_recurrence_examples():
    assert np.allclose(series_exp(PowerSeries.monomial(1, 12)).coeffs, factorial_series(12).coeffs, rtol=0, atol=1e-16)
    assert np.array_equal(series_exp(PowerSeries.zeros(6)).coeffs, PowerSeries.constant(1, 6).coeffs)


def test_exp_singular_exponent_against_samples():
    M = 32
    g = -series_mobius(1, 1, 1, -1, M)
    s = series_exp(g)
    assert s.coeffs[0] == pytest.approx(math.exp(-1), abs=1e-15)
    # r = 0.5 loses r^-n digits at high n; r = 0.8 keeps the oracle below 1e-10
    oracle = series_from_samples(lambda z: np.exp(-(1 + z) / (1 - z)), M, r=0.8)
    assert np.max(np.abs(s.coeffs - oracle.coeffs)) < 1e-10


def test_compose_examples():
    f = PowerSeries.monomial(2, 8)
    g = poly(0, 1, 1)
    assert np.allclose(series_compose(f, g).coeffs, poly(0, 0, 1, 2, 1).coeffs)
    a = poly(0.1, 2, -1j, 0.5)
    assert np.allclose(series_compose(a, PowerSeries.monomial(1, 8)).coeffs, a.coeffs)
    with pytest.raises(DomainError):
        series_compose(a, poly(0.1, 1))


def test_compose_against_samples():
    M = 32

    def phi(z):
        return z * (z + 0.5) / (1 + z / 2)

    f = series_mul(PowerSeries.monomial(1, M), series_mobius(0.5, 1, 1, 0.5, M))
    ff = series_compose(f, f)
    oracle = series_from_samples(lambda z: phi(phi(z)), M, r=0.9)
    assert np.max(np.abs(ff.coeffs - oracle.coeffs)) < 1e-10
    assert ff.coeffs[1] == pytest.approx(0.25)


def test_samples_examples_and_errors():
    r = series_from_samples(lambda z: z**2, 8, r=0.5)
    assert np.max(np.abs(r.coeffs - PowerSeries.monomial(2, 8).coeffs)) < 1e-12
    one = series_from_samples(lambda z: np.ones_like(z), 8)
    assert np.max(np.abs(one.coeffs - PowerSeries.constant(1, 8).coeffs)) < 1e-15
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            series_from_samples(lambda z: z, 4, r=bad)


def test_samples_conditioning_warning():
    with pytest.warns(ConditioningWarning):
        s = series_from_samples(lambda z: z, 64, r=0.5)
    assert s.warning is not None
    assert series_from_samples(lambda z: z, 32, r=0.5).warning is None


coef = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)
series_st = st.lists(coef, min_size=9, max_size=9).map(PowerSeries)


@settings(max_examples=60, deadline=None)
@given(series_st, series_st, series_st)
def test_mul_commutative_associative(a, b, c):
    assert np.max(np.abs(series_mul(a, b).coeffs - series_mul(b, a).coeffs)) < 1e-13
    lhs = series_mul(series_mul(a, b), c).coeffs
    rhs = series_mul(a, series_mul(b, c)).coeffs
    assert np.max(np.abs(lhs - rhs)) < 1e-13 * max(1.0, np.max(np.abs(lhs)))


small = st.lists(st.complex_numbers(max_magnitude=0.3, allow_nan=False, allow_infinity=False), min_size=13, max_size=13)


@settings(max_examples=60, deadline=None)
@given(small, small)
def test_exp_homomorphism(g1, g2):
    a, b = PowerSeries(g1), PowerSeries(g2)
    lhs = series_exp(a + b).coeffs
    rhs = series_mul(series_exp(a), series_exp(b)).coeffs
    assert np.max(np.abs(lhs - rhs)) < 1e-10
