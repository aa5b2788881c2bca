"""Periodic interface oscillations, Floquet data and the heteroclinic bifurcation."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from tfe_lab.errors import ParameterError
from tfe_lab.orbits import (N_PLUS, equilibria, exact_orbit_n1, find_periodic_orbit,
                            floquet_multipliers, heteroclinic_connection_exponent,
                            oscillatory_coefficients, trace_heteroclinic_bifurcation)


@pytest.fixture(scope="module")
def exact():
    return exact_orbit_n1()


@pytest.fixture(scope="module")
def numeric_n1():
    return find_periodic_orbit(1.0)


def test_coefficients_from_symbolic_substitution():
    y, mu = sp.symbols("y mu", positive=True)
    s = sp.Symbol("s")
    phi = sp.Function("phi")
    F = (1 - y) ** mu * phi(sp.log(1 - y))
    third = sp.diff(F, y, 3) * (1 - y) ** (3 - mu)
    third = sp.expand(third.subs(sp.log(1 - y), s).doit())
    derivs = [sp.Subs(sp.Derivative(phi(s), (s, k)), s, s).doit() if k else phi(s) for k in range(4)]
    collected = sp.collect(sp.expand(sp.simplify(third.subs(y, 1 - sp.exp(s)))), derivs, evaluate=False)
    lead = collected[derivs[3]]
    for n in (0.5, 1.0, 1.5):
        a2, a1, a0 = oscillatory_coefficients(n)
        value = {k: float((collected.get(d, 0) / lead).subs(mu, 3 / sp.nsimplify(n)))
                 for k, d in zip((0, 1, 2), derivs[:3])}
        assert value[2] == pytest.approx(a2)
        assert value[1] == pytest.approx(a1)
        assert value[0] == pytest.approx(a0)


def test_cubic_root_and_period(exact):
    theta = (3.0 - math.sqrt(5.0)) / 2.0
    assert exact.theta == pytest.approx(0.381966, abs=1e-6)
    assert exact.theta == pytest.approx(theta, abs=1e-14)
    assert exact.period == pytest.approx(-2.0 * math.log(theta), abs=1e-13)
    assert exact.period == pytest.approx(1.9248, abs=1e-4)


def test_exact_orbit_is_antisymmetric_and_closes(exact):
    half = exact.samples.shape[0] // 2
    assert np.allclose(exact.samples[half:], -exact.samples[:half], atol=1e-13)
    assert abs(exact.samples[0, 0]) < 1e-15 and exact.samples[0, 1] > 0.0


def test_numerical_orbit_matches_exact(numeric_n1, exact):
    assert numeric_n1.period == pytest.approx(exact.period, abs=1e-6)
    shifted = numeric_n1.samples[:, 0]
    assert np.max(np.abs(shifted - exact.samples[:, 0])) <= 1e-5


def test_floquet_multipliers_at_unit_exponent(numeric_n1):
    assert numeric_n1.phase_multiplier == pytest.approx(1.0, abs=1e-5)
    assert np.all(numeric_n1.floquet_moduli < 1.0)


@pytest.mark.parametrize("n", [0.5, 1.0, 1.5])
def test_energy_identity(n):
    orbit = find_periodic_orbit(n, compute_floquet=False)
    assert orbit.energy_identity_defect() <= 1e-6


def test_exact_orbit_energy_identity(exact):
    assert exact.energy_identity_defect() <= 1e-12


@given(st.floats(min_value=0.2, max_value=2.9))
def test_equilibria_exist_exactly_between_three_halves_and_three(n):
    eq = equilibria(n)
    if 1.5 < n < 3.0:
        assert eq is not None and eq[0] == -eq[1] > 0.0
        _, _, a0 = oscillatory_coefficients(n)
        assert a0 * eq[0] + eq[0] ** (1.0 - n) == pytest.approx(0.0, abs=1e-12)
    else:
        assert eq is None


def test_upper_critical_exponent():
    assert N_PLUS == pytest.approx(1.9019238, abs=1e-7)
    mu = 3.0 / N_PLUS
    assert 3 * mu * mu - 6 * mu + 2 == pytest.approx(0.0, abs=1e-14)


def test_bifurcation_parameter_validation():
    with pytest.raises(ParameterError):
        trace_heteroclinic_bifurcation((1.2, 1.9))
    with pytest.raises(ParameterError):
        trace_heteroclinic_bifurcation((1.6, 1.9), period_cap=5)


@pytest.mark.slow
def test_two_routes_to_the_bifurcation_agree():
    trace = trace_heteroclinic_bifurcation((1.6, 1.9), period_cap=50.0)
    connection = heteroclinic_connection_exponent()
    assert trace.bracket[0] < trace.bracket[1]
    assert abs(trace.n_h_estimate - connection) < 1e-4
    _, periods = trace.final_decade()
    assert np.all(np.diff(periods) > 0.0)
