"""Numerical building blocks against closed-form oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import beta as beta_fn

from tfe_lab.errors import AsymmetricMatrix, NoSignChange, ParameterError, QuadratureDivergence
from tfe_lab.numerics import (RationalSeries, eig_banded_symmetric, integrate_ivp, quad_weighted,
                              scan_sign_changes, series_diff, series_mul, series_pow,
                              solve_bracketed, unit_ball_volume)
from tfe_lab.numerics.quadrature import ball_integral


@given(st.floats(min_value=-0.9, max_value=8.0))
def test_power_singularity_integral_matches_closed_form(exponent):
    value = quad_weighted(lambda r: (1.0 - r) ** exponent, (0.0, 1.0), exponent, rtol=1e-10)
    assert value == pytest.approx(1.0 / (exponent + 1.0), rel=1e-9)


@given(st.integers(min_value=1, max_value=5), st.floats(min_value=0.2, max_value=6.0))
def test_beta_integral(a, e):
    # only the right endpoint may be singular

    value = quad_weighted(lambda r: r ** (a - 1) * (1 - r) ** e, (0.0, 1.0), e, rtol=1e-10)
    assert value == pytest.approx(beta_fn(a, e + 1), rel=1e-8)


def test_non_integrable_exponent_rejected():
    with pytest.raises(ParameterError):
        quad_weighted(lambda r: 1.0 / (1.0 - r), (0.0, 1.0), -1.0)


def test_mislabelled_singularity_is_detected():
    with pytest.raises(QuadratureDivergence):
        quad_weighted(lambda r: (1.0 - r) ** -0.95, (0.0, 1.0), 0.0, rtol=1e-12)


@pytest.mark.parametrize("dim", [1, 2, 3, 4, 5])
def test_ball_volume_and_integral(dim):
    assert ball_integral(lambda r: np.ones_like(r), dim) == pytest.approx(unit_ball_volume(dim), rel=1e-12)
    assert unit_ball_volume(2) == pytest.approx(math.pi)


def test_brent_root_of_cosine():
    assert solve_bracketed(math.cos, (1.0, 2.0), tol=1e-15) == pytest.approx(math.pi / 2, abs=1e-14)


def test_root_requires_sign_change():
    with pytest.raises(NoSignChange):
        solve_bracketed(lambda x: x * x + 1.0, (-1.0, 1.0))


def test_scan_sign_changes_finds_all_sine_zeros():
    grid = np.linspace(0.5, 10.0, 200)
    brackets = scan_sign_changes(math.sin, grid)
    roots = [solve_bracketed(math.sin, b) for b in brackets]
    assert np.allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-11)


def test_ivp_harmonic_oscillator_and_events():
    def rhs(t, y):
        return np.array([y[1], -y[0]])

    def crossing(t, y):
        return y[0]

    traj = integrate_ivp(rhs, [1.0, 0.0], (0.0, 10.0), tol=1e-12, event_fns=[crossing])
    assert traj.y == pytest.approx([math.cos(10.0), -math.sin(10.0)], abs=1e-9)
    times = [e[0] if isinstance(e, tuple) else e.t for e in traj.events]
    expected = [math.pi / 2 + k * math.pi for k in range(3)]
    assert np.allclose(sorted(times)[:3], expected, atol=1e-9)
    assert traj.sample(1.234)[0] == pytest.approx(math.cos(1.234), abs=1e-8)


def test_ivp_backward_direction():
    traj = integrate_ivp(lambda t, y: -y, [1.0], (0.0, -2.0), tol=1e-12)
    assert traj.y[0] == pytest.approx(math.exp(2.0), rel=1e-10)


def test_banded_eigenproblem_matches_dense():
    rng = np.random.default_rng(7)
    size = 40
    a = np.zeros((size, size))
    for off in range(3):
        d = rng.normal(size=size - off)
        a += np.diag(d, off) + (np.diag(d, -off) if off else 0)
    pairs = eig_banded_symmetric(a)
    assert np.allclose([lam for lam, _ in pairs], np.linalg.eigvalsh(a), atol=1e-12)


def test_asymmetric_matrix_refused():
    a = np.diag(np.arange(5.0)) + np.diag(np.ones(4), 1)
    with pytest.raises(AsymmetricMatrix):
        eig_banded_symmetric(a)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=7))
def test_binomial_series_matches_exact_coefficients(alpha):
    order = 6
    y = RationalSeries.variable(order)
    power = series_pow(1 + y, alpha)
    coeff = Fraction(1)
    for k in range(order + 1):
        assert power[k] == coeff
        coeff = coeff * (alpha - k) / (k + 1)


def test_series_product_and_derivative():
    y = RationalSeries.variable(8)
    square = series_mul(1 + y, 1 - y)
    assert list(square.coefficients[:3]) == [1, 0, -1]
    inverse = series_pow(1 - y, -1)
    assert all(c == 1 for c in inverse.coefficients)
    assert list(series_diff(inverse).coefficients) == [k + 1 for k in range(8)]
    assert (series_pow(1 + y, Fraction(1, 2)) ** 2) == 1 + y
