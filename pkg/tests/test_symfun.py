"""Elementary symmetric functions, cones and Newton-Maclaurin"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

positive = st.lists(st.floats(0.05, 10.0), min_size=1, max_size=6)
general = st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=6)


def test_sigma_examples():
    """sigma_0 = 1, sigma_1(I) = n, sigma_2(1,2,3) = 11"""
    from core.symfun import Spectrum, sigma

    assert sigma(0, Spectrum.of([4.0, -2.0])) == 1.0
    assert sigma(1, Spectrum.isotropic(3, 1.0)) == 3.0
    assert sigma(2, Spectrum.of([1, 2, 3])) == pytest.approx(11.0, rel=1e-15)


def test_sigma_index_range():
    """k outside 0..n is a domain error"""
    from core.errors import DomainError
    from core.symfun import Spectrum, sigma

    with pytest.raises(DomainError):
        sigma(3, Spectrum.of([1, 2]))
    with pytest.raises(DomainError):
        sigma(-1, Spectrum.of([1, 2]))


def test_spectrum_rejects_non_finite():
    """Non-finite curvatures never enter a Spectrum"""
    from core.errors import DomainError
    from core.symfun import Spectrum

    with pytest.raises(DomainError):
        Spectrum.of([1.0, math.nan])
    with pytest.raises(DomainError):
        Spectrum.of([])


def test_sigma_ratio_examples():
    """Trace, isotropic ratio and (1,2,3)"""
    from core.symfun import Spectrum, sigma_ratio

    assert sigma_ratio(0, Spectrum.of([2, 2])) == pytest.approx(4.0)
    for n in (2, 3, 5):
        assert sigma_ratio(1, Spectrum.isotropic(n, 0.7)) == pytest.approx((n - 1) / 2 * 0.7)
    assert sigma_ratio(1, Spectrum.of([1, 2, 3])) == pytest.approx(11 / 6)


def test_sigma_ratio_singular():
    """sigma_k = 0 raises the singular-ratio error"""
    from core.errors import DomainError, SingularRatioError
    from core.symfun import Spectrum, sigma_ratio

    with pytest.raises(SingularRatioError):
        sigma_ratio(1, Spectrum.of([1.0, -1.0]))
    assert issubclass(SingularRatioError, DomainError)


def test_gamma_cone_examples():
    """(3,-1) is in Gamma_1 but not Gamma_2; positive spectra are in every cone"""
    from core.symfun import Spectrum, in_gamma_cone

    s = Spectrum.of([3.0, -1.0])
    assert in_gamma_cone(1, s)
    assert not in_gamma_cone(2, s)
    assert in_gamma_cone(3, Spectrum.of([0.1, 2.0, 5.0]))


def test_newton_maclaurin_examples():
    """Isotropic spectra give zero; worked values for (1,2) and (1,1,2)"""
    from core.symfun import Spectrum, newton_maclaurin_margin

    for n in (2, 3, 4):
        for k in range(1, n):
            margin = newton_maclaurin_margin(k, Spectrum.isotropic(n, 1.3))
            assert margin == pytest.approx(0.0, abs=1e-12)
    assert newton_maclaurin_margin(1, Spectrum.of([1, 2])) == pytest.approx(1.0)
    # 1*2*4^2 - 3*2*1*5
    assert newton_maclaurin_margin(1, Spectrum.of([1, 1, 2])) == pytest.approx(2.0)


def test_c_nk_values():
    """Printed constants and their reciprocal, the sharp Maclaurin constant"""
    from core.symfun import Spectrum, c_nk, maclaurin_constant, sigma

    assert c_nk(2, 1) == pytest.approx(4.0)
    assert c_nk(3, 1) == pytest.approx(3.0)
    assert c_nk(3, 2) == pytest.approx(3**1.5)
    for n, k in ((2, 1), (3, 1), (3, 2), (5, 3)):
        s = Spectrum.isotropic(n, 0.8)
        sharp = maclaurin_constant(n, k) * sigma(k, s) ** ((k + 1) / k)
        assert sigma(k + 1, s) == pytest.approx(sharp, rel=1e-13)


def test_cgls_coefficient():
    """(n-k)/(k+1), equal to n at k = 0"""
    from core.errors import DomainError
    from core.symfun import cgls_coefficient

    assert cgls_coefficient(4, 0) == 4.0
    assert cgls_coefficient(3, 1) == pytest.approx(1.0)
    assert cgls_coefficient(5, 2) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        cgls_coefficient(3, 3)


def test_gauss_bonnet():
    """L_0 = 1; L_1 for n=2 is 2 sigma_2 - 2 term by term"""
    from core.errors import DomainError
    from core.symfun import Spectrum, gauss_bonnet_Lk

    assert gauss_bonnet_Lk(3, 0, Spectrum.of([1, 2, 3])) == pytest.approx(1.0)
    c = 2.0
    assert gauss_bonnet_Lk(2, 1, Spectrum.isotropic(2, c)) == pytest.approx(2 * c**2 - 2)
    with pytest.raises(DomainError):
        gauss_bonnet_Lk(3, 2, Spectrum.of([1, 2, 3]))


def test_sigma_complement_is_gradient():
    """sigma_j(kappa|i) matches the finite-difference derivative of sigma_{j+1}"""
    from core.symfun import elementary_symmetric, sigma_complement

    kappa = np.array([0.3, 1.7, 2.2, -0.4])
    comp = sigma_complement(kappa)
    h = 1e-6
    for i in range(4):
        bump = np.zeros(4)
        bump[i] = h
        fd = (elementary_symmetric(kappa + bump) - elementary_symmetric(kappa - bump)) / (2 * h)
        np.testing.assert_allclose(comp[i], fd[1:], rtol=1e-7, atol=1e-8)


@given(general, st.randoms(use_true_random=False))
def test_sigma_permutation_invariant(values, rnd):
    """sigma_k does not depend on the order of the curvatures"""
    from core.symfun import elementary_symmetric

    shuffled = list(values)
    rnd.shuffle(shuffled)
    np.testing.assert_allclose(
        elementary_symmetric(np.array(values)),
        elementary_symmetric(np.array(shuffled)),
        rtol=1e-10,
        atol=1e-9,
    )


@given(general)
def test_sigma_matches_subset_enumeration(values):
    """The recurrence agrees with brute-force enumeration"""
    from core.symfun import Spectrum, sigma, sigma_by_subsets

    s = Spectrum.of(values)
    for k in range(len(values) + 1):
        scale = max(1.0, float(np.prod(np.abs(values) + 1.0)))
        assert sigma(k, s) == pytest.approx(sigma_by_subsets(k, values), abs=1e-10 * scale)


@given(general)
def test_sigma_removal_recurrence(values):
    """sigma_k = sigma_k(kappa|i) + kappa_i sigma_{k-1}(kappa|i)"""
    from core.symfun import elementary_symmetric, sigma_complement

    kappa = np.array(values)
    n = len(values)
    if n < 2:
        return
    full = elementary_symmetric(kappa)
    comp = sigma_complement(kappa)
    scale = float(np.prod(np.abs(kappa) + 1.0))
    for i in range(n):
        reduced = elementary_symmetric(np.delete(kappa, i))
        np.testing.assert_allclose(comp[i], reduced, atol=1e-10 * scale)
        for k in range(1, n + 1):
            tail = reduced[k] if k < n else 0.0
            assert full[k] == pytest.approx(tail + kappa[i] * reduced[k - 1], abs=1e-10 * scale)


@given(positive)
def test_newton_maclaurin_on_positive_cone(values):
    """k(n-k) sigma_k^2 >= (n-k+1)(k+1) sigma_{k-1} sigma_{k+1} in Gamma_n"""
    from core.symfun import Spectrum, elementary_symmetric, newton_maclaurin_margin

    n = len(values)
    s = Spectrum.of(values)
    sig = elementary_symmetric(s.as_array())
    for k in range(1, n):
        scale = k * (n - k) * sig[k] ** 2
        assert newton_maclaurin_margin(k, s) >= -1e-12 * scale


@given(positive)
def test_maclaurin_form(values):
    """sigma_{k+1} <= C sigma_k^{(k+1)/k} with the sharp constant"""
    from core.symfun import Spectrum, maclaurin_constant, sigma

    n = len(values)
    s = Spectrum.of(values)
    for k in range(1, n):
        bound = maclaurin_constant(n, k) * sigma(k, s) ** ((k + 1) / k)
        assert sigma(k + 1, s) <= bound * (1 + 1e-12)
