"""Linearized spectrum, discretization and the exact symmetry certificate."""

import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given
from hypothesis import strategies as st

from tfe_lab.errors import ParameterError
from tfe_lab.numerics import unit_ball_volume
from tfe_lab.params import ProblemParams
from tfe_lab.profiles import explicit_profile_n1, shoot_fbp_profile
from tfe_lab.spectral import (VERDICT_DEGENERATE, VERDICT_NOT_SYMMETRIC, VERDICT_SYMMETRIC,
                              apply_operator_to_polynomial, discretize_operator,
                              eigenvalues_closed_form, nonradial_eigenvalue,
                              polynomial_eigenfunctions, printed_b_y4, rho_inner_product,
                              sample_zero_mode, symmetry_certificate, zero_eigenfunction_general_n,
                              zero_mode_residual)


@pytest.fixture(scope="module")
def spectrum1():
    return polynomial_eigenfunctions(1, 8)


@pytest.fixture(scope="module")
def profile_half():
    return shoot_fbp_profile(ProblemParams(0.5))


@pytest.mark.parametrize("m,N,k,expected", [(2, 1, 0, 0), (2, 1, 2, 1), (2, 2, 2, 1)])
def test_closed_form_examples(m, N, k, expected):
    assert eigenvalues_closed_form(m, N, k, exact=True) == expected


@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=10))
def test_closed_form_signs_and_growth(N, half_k):
    k = 2 * half_k
    positive = eigenvalues_closed_form(2, N, k, exact=True)
    operator = eigenvalues_closed_form(2, N, k, sign="operator", exact=True)
    assert operator == -positive
    assert eigenvalues_closed_form(2, N, k + 2, exact=True) > positive >= 0


def test_closed_form_rejects_odd_index():
    with pytest.raises(ParameterError):
        eigenvalues_closed_form(2, 1, 3)


def test_general_order_closed_form_printed_variant_differs():
    derived = eigenvalues_closed_form(3, 1, 4, exact=True)
    printed = eigenvalues_closed_form(3, 1, 4, variant="printed", exact=True)
    assert derived != printed
    assert eigenvalues_closed_form(2, 1, 4, variant="derived", exact=True) == 7


def test_nonradial_constant():
    assert nonradial_eigenvalue(3, 2) == 9


def test_zero_mode_normalization(spectrum1):
    assert spectrum1.b0 ** 2 == pytest.approx(3.0 / 4.0, rel=1e-14)
    assert spectrum1.b0 == pytest.approx(-math.sqrt(3.0 / (2.0 * unit_ball_volume(1))))
    psi0 = spectrum1.eigenfunctions[0]
    assert np.allclose(psi0, [spectrum1.b0 * -1, 0.0, spectrum1.b0], atol=1e-15)
    assert np.max(np.abs(apply_operator_to_polynomial(psi0, 1))) <= 1e-14


@pytest.mark.parametrize("N", [1, 2, 3])
def test_gram_matrix_is_identity(N):
    spectrum = polynomial_eigenfunctions(N, 8)
    gram = spectrum.gram_matrix()
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-8
    assert abs(gram[0, 1]) <= 1e-10


def test_eigenfunctions_solve_the_eigenproblem_symbolically(spectrum1):
    r = sp.Symbol("r")
    c0 = sp.Rational(1, 120)
    N = 1

    def lap(f):
        return sp.diff(f, r, 2) + (N - 1) / r * sp.diff(f, r)

    for lam, coeffs in zip(spectrum1.eigenvalues, spectrum1.eigenfunctions):
        psi = sum(sp.Float(c, 30) * r ** j for j, c in enumerate(coeffs))
        lhs = sp.expand(c0 * (lap((1 - r ** 2) * lap(psi)) + 2 * N * lap(psi)) * (1 - r ** 2))
        resid = sp.Poly(sp.expand(lhs - lam * psi), r).all_coeffs()
        scale = max(abs(float(c)) for c in coeffs) * max(lam, 1.0)
        assert max(abs(float(c)) for c in resid) <= 1e-9 * scale


def test_polynomial_eigenvalues_match_closed_form(spectrum1):
    expected = [eigenvalues_closed_form(2, 1, k) for k in spectrum1.indices]
    assert np.allclose(spectrum1.eigenvalues, expected, rtol=1e-14)


def test_completeness_proxy(spectrum1):
    def f(r):
        return (1.0 - r * r) * np.cos(2.0 * r)

    total = rho_inner_product(f, f, 1)
    remainders = []
    acc = 0.0
    for index in range(len(spectrum1.eigenfunctions)):
        coef = rho_inner_product(f, lambda r, i=index: spectrum1.evaluate(i, r), 1)
        acc += coef * coef
        remainders.append(total - acc)
    assert np.all(np.diff(remainders) <= 1e-15)
    assert remainders[-1] < 1e-6 * total


@pytest.mark.parametrize("N", [1, 2])
def test_discrete_spectrum_within_one_percent(N):
    op = discretize_operator(ProblemParams(1.0, N=N), 400)
    lam = op.eigenvalues(4)
    for k, value in zip((2, 4, 6), lam[1:]):
        assert value == pytest.approx(eigenvalues_closed_form(2, N, k), rel=1e-2)
    assert op.symmetry_defect() <= 1e-12


def test_two_dimensional_discretization_converges_at_order_above_three_halves():
    errors = []
    for M in (50, 100, 200):
        lam = discretize_operator(ProblemParams(1.0, N=2), M).eigenvalues(3)
        errors.append(max(abs(lam[i] - eigenvalues_closed_form(2, 2, 2 * i)) /
                          max(eigenvalues_closed_form(2, 2, 2 * i), 1.0) for i in (1, 2)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.5)


def test_too_small_grid_rejected():
    with pytest.raises(ParameterError):
        discretize_operator(ProblemParams(1.0, N=3), 6)


def test_refusal_when_leading_eigenvalue_misses(monkeypatch):
    # every admissible grid already meets the 5 % band, so shift the reference
    from tfe_lab import spectral

    monkeypatch.setattr(spectral, "eigenvalues_closed_form", lambda m, N, k: 1.2)
    with pytest.raises(ParameterError, match="too coarse"):
        spectral.discretize_operator(ProblemParams(1.0, N=3), 8)


def test_explicit_zero_mode_is_scaling_derivative():
    prof = explicit_profile_n1(1, a=1.0)
    psi = zero_eigenfunction_general_n(prof)
    r = prof.grid
    c0 = 1.0 / 120.0
    # d/da of c0 (a^2 - r^2)^2 at a = 1 is 4 c0 (1 - r^2); here psi = 4 F - r F'
    assert np.allclose(psi, 4.0 * c0 * (1.0 - r * r), atol=1e-15)


def test_zero_mode_for_half_exponent(profile_half):
    psi = zero_eigenfunction_general_n(profile_half)
    assert np.all(psi[:-1] > 0.0)
    # the stored grid stops 1e-7 a short of the interface
    assert psi[-1] <= 1e-6 * psi.max()
    # interface behaviour: F ~ (a - y)^2 there, so psi_0 ~ -y F' vanishes linearly
    a = profile_half.interface
    gaps = np.array([1e-3, 2e-3, 4e-3, 8e-3]) * a
    values = sample_zero_mode(profile_half, a - gaps)
    slope = np.polyfit(np.log(gaps), np.log(values), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)


def test_half_exponent_operator_has_zero_eigenvalue(profile_half):
    params = ProblemParams(0.5)
    coarse = discretize_operator(params, 100, profile=profile_half)
    fine = discretize_operator(params, 200, profile=profile_half)
    lam_c = np.abs(coarse.eigenvalues(2))
    lam_f = np.abs(fine.eigenvalues(2))
    assert lam_f[0] < lam_c[0] < 1e-4 * lam_c[1]
    assert not fine.symmetric
    assert zero_mode_residual(fine, profile_half) < 1e-3


def test_unit_exponent_certificate_is_symmetric():
    verdict = symmetry_certificate(1)
    assert verdict.verdict == VERDICT_SYMMETRIC
    assert verdict.b_squared_y4 == (Fraction(2, 15),)
    low, high = printed_b_y4(1)
    assert high == pytest.approx(math.sqrt(30.0) / 15.0, abs=1e-15)
    assert low == -high
    assert abs(explicit_profile_n1(1).second_deriv_origin) == pytest.approx(high, abs=1e-12)


@pytest.mark.parametrize("n", [Fraction(1, 2), Fraction(4, 5), Fraction(6, 5)])
def test_non_symmetric_exponents(n):
    verdict = symmetry_certificate(n)
    assert verdict.verdict == VERDICT_NOT_SYMMETRIC
    assert not set(verdict.b_squared_y4) & set(verdict.b_squared_y6)


def test_degenerate_coincidence_at_two_thirds():
    verdict = symmetry_certificate(Fraction(2, 3))
    assert verdict.verdict == VERDICT_DEGENERATE
    assert verdict.b_squared_y4 == (0,)
    assert 0 in verdict.b_squared_y6


@given(st.fractions(min_value=Fraction(1, 12), max_value=Fraction(17, 12), max_denominator=12))
def test_non_symmetry_witness(n):
    assume(n not in (Fraction(2, 3), Fraction(1)))
    assert symmetry_certificate(n).verdict == VERDICT_NOT_SYMMETRIC


def test_certificate_rejects_irrational_input():
    with pytest.raises(ParameterError):
        symmetry_certificate(math.sqrt(2.0))


def test_certificate_serializes_rationals_as_text():
    data = symmetry_certificate(Fraction(1, 2)).as_dict()
    assert data["b_squared_y4"] == ["-8/81"]
