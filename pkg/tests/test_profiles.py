"""Similarity profiles against closed forms and independent oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from tfe_lab.errors import ParameterError
from tfe_lab.params import ProblemParams, explicit_profile_constant
from tfe_lab.profiles import (explicit_profile_2m_n1, explicit_profile_n1, fbp_kernel_sequence,
                              fundamental_kernel, polyharmonic_residual, printed_profile_constant,
                              shoot_cp_profile, shoot_fbp_profile, sup_distance)


def kernel_oracle(y):
    """Unit-mass fundamental solution profile as a Fourier integral."""
    return quad(lambda k: math.exp(-k ** 4) * math.cos(k * y), 0.0, 12.0, limit=400,
                epsabs=1e-14, epsrel=1e-13)[0] / math.pi


@pytest.fixture(scope="module")
def kernel():
    return fundamental_kernel()


@pytest.mark.parametrize("N,c0", [(1, Fraction(1, 120)), (2, Fraction(1, 192)), (3, Fraction(1, 280))])
def test_explicit_profile_constant_and_residual(N, c0):
    prof = explicit_profile_n1(N)
    assert prof.metadata["c0"] == c0
    assert explicit_profile_constant(2, N) == c0
    assert np.max(np.abs(prof.ode_residual())) <= 1e-10
    assert prof.values[0] == pytest.approx(1.0, rel=1e-14)


@given(st.integers(min_value=2, max_value=5), st.integers(min_value=1, max_value=4))
def test_general_order_constant_solves_polyharmonic_equation(m, N):
    c0 = explicit_profile_constant(m, N)
    assert all(c == 0 for c in polyharmonic_residual(m, N, c0))
    # the constant printed with the closed form is off by a factor of two
    assert printed_profile_constant(m, N) == c0 / 2
    assert any(c != 0 for c in polyharmonic_residual(m, N, c0 / 2))


def test_general_order_profile_reduces_to_fourth_order():
    four = explicit_profile_2m_n1(2, 1)
    assert four.metadata["c0"] == Fraction(1, 120)
    assert four.metadata["max_residual"] == 0.0


@given(st.floats(min_value=0.3, max_value=3.0))
def test_explicit_profile_mass_matches_quadrature(a):
    prof = explicit_profile_n1(1, a=a)
    c0 = 1.0 / 120.0
    exact = quad(lambda y: c0 * (a * a - y * y) ** 2, -a, a)[0]
    assert prof.mass == pytest.approx(exact, rel=1e-12)


def test_fbp_shooting_matches_explicit_solution():
    shot = shoot_fbp_profile(ProblemParams(1.0))
    exact = explicit_profile_n1(1)
    assert shot.second_deriv_origin == pytest.approx(-4.0 / math.sqrt(120.0), abs=1e-8)
    assert shot.interface == pytest.approx(exact.interface, rel=1e-8)
    assert sup_distance(shot, exact, shot.interface) <= 1e-6


def test_fbp_profiles_are_positive_and_flatten_with_n():
    curvatures = []
    for n in (0.25, 0.5, 0.75, 1.0):
        prof = shoot_fbp_profile(ProblemParams(n))
        assert np.all(prof.values[:-1] > 0.0)
        assert prof.values[0] == pytest.approx(1.0, rel=1e-12)
        assert np.max(np.abs(prof.ode_residual())) < 1e-6
        curvatures.append(prof.second_deriv_origin)
    assert np.all(np.diff(curvatures) < 0.0)


def test_fbp_shooting_rejects_unsupported_exponents():
    with pytest.raises(ParameterError):
        shoot_fbp_profile(ProblemParams(3.5))
    with pytest.raises(ParameterError):
        shoot_fbp_profile(ProblemParams(1.0, N=2))


def test_fundamental_kernel_matches_fourier_integral(kernel):
    prof, bundle = kernel
    ys = np.array([0.0, 0.7, 1.9, 3.45346, 5.0])
    assert np.allclose(prof.evaluate(ys), [kernel_oracle(y) for y in ys], atol=1e-9)
    ratio = -math.gamma(0.75) / (4.0 * math.gamma(1.25))
    assert prof.second_deriv_origin == pytest.approx(ratio, abs=1e-9)
    assert prof.mass == 1.0
    assert bundle.c2 == pytest.approx(math.sqrt(3.0) * bundle.c1)


def test_fundamental_kernel_first_zero(kernel):
    prof, _ = kernel
    sign = np.sign(prof.values)
    first = np.argmax(sign < 0)
    assert prof.grid[first - 1] < 3.45346 < prof.grid[first]


def test_cauchy_profile_at_unit_exponent():
    prof = shoot_cp_profile(1.0)
    assert prof.second_deriv_origin == pytest.approx(-0.3697143, abs=1e-3)
    assert prof.normalization == "unit-mass"
    assert prof.zero_count > 0


def test_cauchy_profile_zero_delegates_to_kernel(kernel):
    assert shoot_cp_profile(0.0).second_deriv_origin == kernel[0].second_deriv_origin


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kernel_sequence_zero_counts(k):
    prof = fbp_kernel_sequence(k)
    assert prof.zero_count == k
    assert prof.values[-1] == pytest.approx(0.0, abs=1e-10)
    assert prof.mass == 1.0


def test_rescaled_family_member():
    prof = shoot_fbp_profile(ProblemParams(0.5))
    big = prof.rescaled(2.0)
    assert big.values[0] == pytest.approx(2.0 ** 8)
    assert big.interface == pytest.approx(2.0 * prof.interface)
    assert big.mass == pytest.approx(prof.mass * 2.0 ** 9)


def test_profile_csv_uses_seventeen_digits():
    text = explicit_profile_n1(1, points=3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "y,F,dF,d2F,d3F"
    assert text.endswith("\n") and "\r" not in text
    assert lines[2].split(",")[0] == format(explicit_profile_n1(1, points=3).grid[1], ".17g")
