"""Centre-subspace coefficients and the logarithmically corrected pattern."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import beta as beta_fn

from tfe_lab.centre import (PatternEvaluator, centre_operator_C, critical_exponent, evaluate_pattern,
                            gamma_coefficients, matched_ode_rate, matched_ode_solution,
                            pattern_mass_exponents, predicted_amplitude)
from tfe_lab.errors import ParameterError
from tfe_lab.numerics import unit_ball_volume
from tfe_lab.params import ProblemParams

BASELINE = {
    1: (0.0096225045, 1.43953191e-13, 105.978889, 3.20852067),
    2: (0.0065276778, 2.0494745e-10, 219.785135, 3.8503444),
    3: (0.0046229188, 1.3464333e-09, 439.869062, 4.5796349),
}


def closed_form_gammas(N):
    """gamma1 = c0 / |b0| and gamma2 = c0^p |b0| N omega_N B(N/2, 2p + 1) / 2."""
    params = ProblemParams(1.0, N)
    c0 = 1.0 / (8 * (N + 2) * (N + 4))
    omega = unit_ball_volume(N)
    b0 = math.sqrt((N + 2) / (2.0 * omega))
    p = params.p0
    return c0 / b0, c0 ** p * b0 * N * omega * beta_fn(N / 2, 2 * p + 1) / 2


@pytest.mark.parametrize("n,N,m,expected", [(1, 1, 2, 6), (0, 4, 2, 2), (1, 2, 3, 5)])
def test_critical_exponent_examples(n, N, m, expected):
    assert critical_exponent(n, N, m) == pytest.approx(expected, abs=1e-14)


@given(st.fractions(min_value=0, max_value=4, max_denominator=10),
       st.integers(min_value=1, max_value=6), st.integers(min_value=2, max_value=5))
def test_decay_exponent_identity(n, N, m):
    p0 = 1 + n + Fraction(2 * m, N)
    beta = 1 / (2 * m + n * N)
    assert 1 / (p0 - 1) == beta * N
    assert critical_exponent(float(n), N, m) == pytest.approx(float(p0), rel=1e-15)


def test_centre_operator_on_zero_and_on_powers():
    r = np.linspace(0, 1, 5)
    assert np.all(centre_operator_C(r, 0 * r, 0 * r, 1.0) == 0.0)
    # r^k is an eigenfunction: C r^k = (n k / 4 - 1) r^k
    assert np.allclose(centre_operator_C(r, r ** 4, 4 * r ** 3, 1.0), 0.0)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_gammas_match_closed_forms_and_baseline(N):
    coeffs = gamma_coefficients(ProblemParams(1.0, N))
    g1, g2 = closed_form_gammas(N)
    assert coeffs.gamma1 == pytest.approx(g1, rel=1e-12)
    assert coeffs.gamma2 == pytest.approx(g2, rel=1e-10)
    base = BASELINE[N]
    assert (coeffs.gamma1, coeffs.gamma2, coeffs.gamma_star, coeffs.a_star) == pytest.approx(base, rel=1e-7)
    assert coeffs.gamma1 > 0 and coeffs.gamma2 > 0


def test_gamma1_against_independent_quadrature():
    c0, b0 = 1.0 / 120.0, math.sqrt(0.75)

    def integrand(r):
        F = c0 * (1 - r * r) ** 2
        dF = -4 * c0 * r * (1 - r * r)
        C = 0.25 * r * dF - F
        return C * (-b0) * (r * r - 1) / (1 - r * r)

    value = -2.0 * quad(integrand, 0.0, 1.0, epsabs=0, epsrel=1e-13)[0]
    assert gamma_coefficients(ProblemParams(1.0, 1)).gamma1 == pytest.approx(value, rel=1e-11)


def test_gammas_stable_under_tolerance_refinement():
    fine = gamma_coefficients(ProblemParams(1.0, 2), rtol=1e-13)
    coarse = gamma_coefficients(ProblemParams(1.0, 2), rtol=1e-9)
    assert coarse.gamma1 == pytest.approx(fine.gamma1, rel=1e-8)
    assert coarse.gamma2 == pytest.approx(fine.gamma2, rel=1e-8)


def test_gamma_preconditions():
    with pytest.raises(ParameterError):
        gamma_coefficients(ProblemParams(0.5, 1))
    with pytest.raises(ParameterError):
        gamma_coefficients(ProblemParams(1.0, 1, p=7.0))


def test_balance_fixes_the_decay_constant():
    coeffs = gamma_coefficients(ProblemParams(1.0, 1))
    tau = 10.0
    b = predicted_amplitude(tau, coeffs)
    # b' = -b / (5 tau) must equal the projected rate
    assert matched_ode_rate(b, coeffs) == pytest.approx(-b / (5.0 * tau), rel=1e-12)
    with pytest.raises(ParameterError):
        predicted_amplitude(0.5, coeffs)


@given(st.floats(min_value=1e-2, max_value=1e3))
def test_matched_ode_converges_to_prediction(b_initial):
    coeffs = gamma_coefficients(ProblemParams(1.0, 1))
    # b^{-5} grows linearly at rate 5 gamma2 / gamma1; tau0 is the transient it needs
    tau0 = b_initial ** -5 / (5.0 * coeffs.gamma2 / coeffs.gamma1)
    tau = max(tau0, 1.0) * np.array([1e1, 1e3, 1e5])
    ratio = matched_ode_solution(tau, b_initial, 0.0, coeffs) / predicted_amplitude(tau, coeffs)
    gaps = np.abs(ratio - 1.0)
    assert np.all(np.diff(gaps) < 0.0)
    assert gaps[-1] < 1e-5


def test_matched_ode_solution_solves_the_ode():
    coeffs = gamma_coefficients(ProblemParams(1.0, 1))
    tau = np.linspace(2.0, 50.0, 9)
    h = 1e-5
    b = matched_ode_solution(tau, 3.0, 2.0, coeffs)
    slope = (matched_ode_solution(tau + h, 3.0, 2.0, coeffs) -
             matched_ode_solution(tau - h, 3.0, 2.0, coeffs)) / (2 * h)
    assert np.allclose(slope, matched_ode_rate(b, coeffs), rtol=1e-6)


def test_pattern_values():
    coeffs = gamma_coefficients(ProblemParams(1.0, 1))
    t = 100.0
    scale = (t * math.log(t)) ** (-0.2)
    assert evaluate_pattern(0.0, t, coeffs) == pytest.approx(scale * coeffs.a_star ** 4 / 120.0, rel=1e-14)
    pattern = PatternEvaluator(coeffs.params, coeffs.a_star)
    assert evaluate_pattern(1.01 * pattern.support_radius(t), t, coeffs) == 0.0
    with pytest.raises(ParameterError):
        evaluate_pattern(0.0, 2.0, coeffs)


def test_pattern_mass_exponents_exact_and_numeric():
    e_t, e_log = pattern_mass_exponents(1, 1)
    assert (e_t, e_log) == (0, Fraction(-1, 4))
    coeffs = gamma_coefficients(ProblemParams(1.0, 1))
    pattern = PatternEvaluator(coeffs.params, coeffs.a_star)
    for t in (10.0, 1e3):
        R = pattern.support_radius(t)
        numeric = quad(lambda x: pattern(x, t), -R, R, epsrel=1e-12)[0]
        assert numeric == pytest.approx(pattern.mass(t), rel=1e-9)
    ratio = pattern.mass(1e6) / pattern.mass(1e3)
    assert ratio == pytest.approx((math.log(1e6) / math.log(1e3)) ** float(e_log), rel=1e-12)
