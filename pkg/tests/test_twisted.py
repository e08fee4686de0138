import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from inner_dyn.errors import DegenerateVarianceError, DomainError, NoSpectralGapError, ResourceError
from inner_dyn.inner import denjoy_wolff
from inner_dyn.transfer import FourierVector, KbSpace, build_transfer_matrix
from inner_dyn.twisted import (
    Observable,
    aperiodicity_scan,
    birkhoff_sample,
    build_twisted,
    clt_check,
    conditional_clt_check,
    default_t_grid,
    exp_observable,
    exponential_check,
    lambda_curve,
    leading_eigen,
    llt_check,
    multiplication_bound,
    multiplication_check,
    sigma2_from_eigen,
    sigma2_monte_carlo,
    tree_threshold,
    twisted_derivative,
)

from reference import BLASCHKE, BOOLE, DOUBLING, SHIFTED, TWO_ATOMS

COS = Observable.cos()


def test_observable_basics():
    psi = Observable.trig(0.5, cos=[1.0, 0.0, 2.0], sin=[0.0, -1.0])
    theta = np.linspace(0, 1, 11)
    direct = 0.5 + np.cos(2 * np.pi * theta) + 2 * np.cos(6 * np.pi * theta) - np.sin(4 * np.pi * theta)
    assert np.max(np.abs(psi(theta) - direct)) < 1e-14
    assert psi.nonconstant() and not Observable.constant(3.0).nonconstant()
    assert psi.mean() == pytest.approx(0.5, abs=1e-14)
    assert psi.centered().mean() == pytest.approx(0.0, abs=1e-14)
    # mean against pi_d: harmonic extension of cos is Re z
    assert COS.mean(0.3 + 0.2j) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(DomainError):
        Observable(FourierVector.character(1, 2))
    ka = psi.kernel_arrays()
    assert ka["psi0"] == 0.5 and list(ka["psi_cos"]) == [1, 0, 2] and list(ka["psi_sin"]) == [0, -1, 0]
    f = Observable.from_function(lambda t: np.sin(2 * np.pi * t) ** 2, 4)
    assert f.coeff(0) == pytest.approx(0.5) and f.coeff(2) == pytest.approx(-0.25)


def test_exp_observable_examples():
    e = exp_observable(COS, 0, 8)
    assert np.array_equal(e.coeffs, FourierVector.constant(1, 8).coeffs)
    t = 1.7
    e = exp_observable(COS, 1j * t, 16)
    n = np.arange(-16, 17)
    assert np.max(np.abs(e.coeffs - 1j ** np.abs(n) * scipy.special.jv(np.abs(n), t))) < 1e-15
    quad = scipy.integrate.quad(lambda th: math.exp(math.cos(2 * math.pi * th)), 0, 1)[0]
    e1 = exp_observable(COS, 1.0, 16)
    assert e1[0].real == pytest.approx(quad, abs=1e-14)
    assert e1[0].real == pytest.approx(1.2660658, abs=1e-7)


def test_exp_methods_agree():
    psi = Observable.trig(0.2, cos=[0.7, 0.0, -0.3], sin=[0.1, 0.4])
    for z in (0.8, 2.5j, -1 + 1j):
        a = exp_observable(psi, z, 24, method="series").coeffs
        b = exp_observable(psi, z, 24, method="fft").coeffs
        assert np.max(np.abs(a - b)) < 1e-12
    with pytest.raises(DomainError):
        exp_observable(psi, 1.0, 8, method="taylor")


def test_exponential_lemma_example():
    for t in (0.5, 2.0, 5.0):
        lhs, rhs = exponential_check(COS, 1j * t, 4.0, 2.0)
        assert lhs <= rhs
        assert rhs == pytest.approx(math.exp(math.sqrt(3) * t * COS.norm(4.0)))


def test_multiplication_bound_domain():
    assert multiplication_bound(4.0, 2.0) == pytest.approx(math.sqrt(3))
    with pytest.raises(DomainError):
        multiplication_bound(2.0, 2.0)


def decaying(B):
    return st.lists(st.complex_numbers(max_magnitude=1.0), min_size=13, max_size=13).map(
        lambda c: FourierVector(np.array(c) * B ** (-np.abs(np.arange(-6, 7)) / 2.0), 6)
    )


@settings(max_examples=100, deadline=None)
@given(decaying(4.0), decaying(2.0))
def test_multiplication_lemma(f, g):
    lhs, rhs = multiplication_check(f, g, 4.0, 2.0)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3), st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       st.complex_numbers(max_magnitude=3.0))
def test_exponential_lemma(a, b, z):
    psi = Observable.trig(0.0, cos=a, sin=b)
    lhs, rhs = exponential_check(psi, z, 4.0, 2.0)
    assert lhs <= rhs * (1 + 1e-12)


def test_build_twisted_at_zero_and_domain():
    T = build_transfer_matrix(BLASCHKE, 32)
    P = build_twisted(T, COS, 0)
    assert np.array_equal(P.matrix, T.full)
    finite = Observable(COS.fourier, B=3.0)
    build_twisted(T, finite, 0.5j, b=2.0)
    with pytest.raises(DomainError):
        build_twisted(T, finite, 0.5j, b=3.0)


@pytest.mark.parametrize("spec", [BLASCHKE, BOOLE])
def test_holomorphy(spec):
    M, h, b = 32, 1e-4, 1.5
    T = build_transfer_matrix(spec, M)
    psi = COS.centered()
    fd = (build_twisted(T, psi, h).matrix - build_twisted(T, psi, -h).matrix) / (2 * h)
    exact = twisted_derivative(T, psi)
    assert KbSpace(b, M).operator_norm(fd - exact) < 1e-6
    z = 0.3j
    fd = (build_twisted(T, psi, z + h).matrix - build_twisted(T, psi, z - h).matrix) / (2 * h)
    assert KbSpace(b, M).operator_norm(fd - twisted_derivative(T, psi, z)) < 1e-6


def test_leading_eigen_at_zero():
    T = build_transfer_matrix(BOOLE, 32)
    lam, v = leading_eigen(build_twisted(T, COS, 0))
    assert lam == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(v.coeffs - FourierVector.constant(1, 32).coeffs)) < 1e-12


def test_leading_eigen_no_gap():
    T = build_transfer_matrix(DOUBLING, 16)
    with pytest.raises(NoSpectralGapError):
        leading_eigen(build_twisted(T, Observable.cos(amplitude=40.0), 1j))


@pytest.mark.parametrize("spec", [BLASCHKE, SHIFTED])
def test_lambda_prime_is_mean(spec):
    # uncentered psi: lam'(0) = i E(psi) against the invariant Poisson measure
    psi = Observable.trig(0.2, cos=[1.0], sin=[0.5])
    h = 1e-4
    lp, lm = lambda_curve(spec, psi, [h, -h], center=False)
    d = denjoy_wolff(spec).point
    assert (lp - lm) / (2 * h) == pytest.approx(1j * psi.mean(d), abs=1e-6)


@pytest.mark.parametrize("spec", [DOUBLING, BOOLE])
def test_lambda_symmetry_and_contraction(spec):
    ts = np.array([0.1, 0.4, 0.9])
    lp = lambda_curve(spec, COS, ts)
    lm = lambda_curve(spec, COS, -ts)
    assert np.max(np.abs(lm - np.conj(lp))) < 1e-10
    assert np.all(np.abs(lp) <= 1 + 1e-10)


@pytest.mark.parametrize("spec", [DOUBLING, BOOLE])
def test_log_lambda_quadratic(spec):
    ts = np.linspace(-0.05, 0.05, 11)
    ts = ts[ts != 0]
    lam = lambda_curve(spec, COS, ts)
    coef = np.polyfit(ts, np.log(lam).real, 4)[2]
    s2 = sigma2_from_eigen(spec, COS)
    assert -2 * coef == pytest.approx(s2, rel=0.01)


def test_sigma2_examples():
    assert sigma2_from_eigen(DOUBLING, Observable.constant(2.0)) == 0.0
    assert sigma2_from_eigen(DOUBLING, COS) == pytest.approx(0.5, abs=1e-3)
    # cos 4 pi t = cos o tau for the doubling map: cos2 - cos is a coboundary shift, same variance
    assert sigma2_from_eigen(DOUBLING, Observable.cos(2)) == pytest.approx(0.5, abs=1e-3)


def test_sigma2_boole_matches_mc():
    s2 = sigma2_from_eigen(BOOLE, COS)
    mc = sigma2_monte_carlo(BOOLE, COS, 1000, 10_000, 7)
    assert s2 > 0
    assert abs(mc.value - s2) / s2 < 0.05


def test_sigma2_off_origin_matches_mc():
    s2 = sigma2_from_eigen(SHIFTED, COS)
    mc = sigma2_monte_carlo(SHIFTED, COS, 1000, 10_000, 7)
    assert abs(mc.value - s2) < 3 * mc.stderr


def test_sigma2_mc_constant():
    mc = sigma2_monte_carlo(DOUBLING, Observable.constant(1.0), 100, 1000, 7)
    assert mc.value == pytest.approx(0.0, abs=1e-20)


@pytest.mark.xfail(strict=True, reason="seed 7 lands 2.9 standard errors low; the window is 1.4 SE")
def test_sigma2_mc_doubling_example():
    mc = sigma2_monte_carlo(DOUBLING, COS, 1000, 10_000, 7)
    assert abs(mc.value - 0.5) < 0.01


def test_sigma2_mc_doubling_three_se():
    mc = sigma2_monte_carlo(DOUBLING, COS, 1000, 10_000, 7)
    assert abs(mc.value - 0.5) < 3 * mc.stderr


def test_birkhoff_sample_reproducible_and_split():
    a = birkhoff_sample(BOOLE, COS, 50, 200, 3)
    b = birkhoff_sample(BOOLE, COS, 50, 200, 3)
    assert np.array_equal(a.sums, b.sums)
    c = birkhoff_sample(BOOLE, COS, 50, 100, 3)
    assert np.array_equal(a.sums[:100], c.sums)


def test_clt_small():
    res = clt_check(DOUBLING, COS, 200, 20_000, 7, sigma2=0.5)
    assert res.ks_distance < 0.02
    with pytest.raises(DegenerateVarianceError):
        clt_check(DOUBLING, Observable.constant(1.0), 100, 100, 7)
    with pytest.raises(DegenerateVarianceError):
        clt_check(DOUBLING, COS, 100, 100, 7, sigma2=0.0)


def test_llt_examples():
    res = llt_check(DOUBLING, COS, 500, 10**6, 0.5, 7, sigma2=0.5)
    assert res.relative_errors[0] < 0.1
    assert res.relative_errors[1] < 0.15
    with pytest.raises(DegenerateVarianceError):
        llt_check(DOUBLING, Observable.constant(1.0), 10, 100, 0.5, 7)
    with pytest.raises(DomainError):
        llt_check(DOUBLING, COS, 100, 500, 0.01, 7, sigma2=0.5)


def test_conditional_clt_doubling():
    res = conditional_clt_check(DOUBLING, COS, 0.37, 16, sigma2=0.5)
    assert res.leaves == 2**16
    assert res.total_weight == pytest.approx(1.0, abs=1e-12)
    assert res.sup_error < 0.05
    assert res.t_grid[0] == -2 and res.t_grid[-1] == 2 and len(res.t_grid) == 17


def test_conditional_clt_depth_zero():
    res = conditional_clt_check(DOUBLING, COS, 0.37, 0, sigma2=0.5)
    assert res.total_weight == 1.0 and res.leaves == 1
    # the indicator of {0 <= t} against Phi(t): worst mismatch is at t = -0.25 or 0
    assert res.sup_error == pytest.approx(0.5, abs=1e-12)


def test_conditional_clt_blaschke_weights():
    res = conditional_clt_check(BLASCHKE, COS, 0.37, 12)
    assert res.total_weight == pytest.approx(1.0, abs=1e-6)
    assert res.leaves == 2**12


def test_conditional_clt_atomic_truncation():
    assert tree_threshold(BOOLE, 0.37) <= 1e-8
    res = conditional_clt_check(BOOLE, COS, 0.37, 1, sigma2=1.0)
    assert 1 - 1e-4 <= res.total_weight <= 1 + 1e-9
    res = conditional_clt_check(TWO_ATOMS, COS, 0.37, 1, sigma2=1.0)
    assert 1 - 1e-4 <= res.total_weight <= 1 + 1e-9
    with pytest.raises(ResourceError):
        conditional_clt_check(BOOLE, COS, 0.37, 2, sigma2=1.0)


def test_conditional_clt_preconditions():
    with pytest.raises(DomainError):
        conditional_clt_check(DOUBLING, COS, 0.3, 21, sigma2=0.5)
    with pytest.raises(ResourceError):
        conditional_clt_check(DOUBLING, COS, 0.3, 20, sigma2=0.5, max_nodes=1000)
    with pytest.raises(DegenerateVarianceError):
        conditional_clt_check(DOUBLING, Observable.constant(1.0), 0.3, 4)


def test_scan_contract():
    grid = default_t_grid()
    assert grid.size == 200 and grid[0] == pytest.approx(-5) and np.min(np.abs(grid)) == pytest.approx(0.05)
    res = aperiodicity_scan(BLASCHKE, COS, [0.05, 0.5, 1.0, 3.0], M=32)
    assert np.all(res.modulus <= 1 + 1e-10)
    assert res.aperiodicity_max < 1
    assert res.to_csv().splitlines()[0] == "t,re,im,abs"
    assert lambda_curve(BLASCHKE, COS, [0.0])[0] == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(DegenerateVarianceError):
        aperiodicity_scan(BLASCHKE, Observable.constant(1.0))


def test_scan_excludes_small_t():
    res = aperiodicity_scan(DOUBLING, COS, [0.0, 0.01, 1.0], M=32)
    assert res.aperiodicity_max == pytest.approx(res.modulus[2])
    assert res.argmax == 1.0
