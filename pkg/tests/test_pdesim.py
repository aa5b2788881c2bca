"""Rescaled thin film equation with absorption: conservation, steady states, decay."""

import numpy as np
import pytest

from tfe_lab.centre import gamma_coefficients
from tfe_lab.errors import ParameterError
from tfe_lab.params import ProblemParams
from tfe_lab.pdesim import (TRACE_COLUMNS, decay_rate, default_data, evolve, initial_state,
                            lyapunov_monitor, mass_matched_profile, run_critical_experiment,
                            run_supercritical_experiment, shape_collapse_error, SimState, step_rescaled_tfe)

C0 = 1.0 / 120.0
P1 = ProblemParams(1.0, 1)


def unit_profile(y):
    return np.where(np.abs(y) < 1.0, C0 * (1.0 - y * y) ** 2, 0.0)


@pytest.fixture(scope="module")
def critical():
    return run_critical_experiment(50.0)


@pytest.fixture(scope="module")
def supercritical():
    return run_supercritical_experiment(8.0)


def test_zero_state_is_an_equilibrium():
    grid = np.linspace(-3.0, 3.0, 151)
    state = SimState(0.0, grid, np.zeros_like(grid), 1e-8, P1)
    new = step_rescaled_tfe(state, 0.1)
    assert np.all(new.v == 0.0)
    assert lyapunov_monitor(new) == 0.0


def test_decay_rate_arithmetic():
    assert decay_rate(ProblemParams(1.0, 1, p=8.0)) == pytest.approx(0.4, abs=1e-15)
    assert decay_rate(P1) == 0.0


def test_steady_profile_persists_without_absorption():
    state = initial_state(P1, unit_profile, cells_per_radius=200)
    trace = evolve(state, 5.0, absorption=False)
    final = trace.final_state
    assert np.max(np.abs(final.v - unit_profile(final.grid))) <= 1e-6
    tau, energy = np.array(trace.tau), np.array(trace.lyapunov)
    assert np.min(np.diff(energy) / np.diff(tau)) >= -1e-6


def test_steady_deviation_converges_at_second_order():
    errors = []
    for cells in (25, 50, 100):
        trace = evolve(initial_state(P1, unit_profile, cells_per_radius=cells), 2.0, absorption=False)
        errors.append(np.max(np.abs(trace.final_state.v - unit_profile(trace.final_state.grid))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders > 1.7)


def test_mass_strictly_decreasing_and_identity_holds():
    trace = evolve(initial_state(P1, radius=0.5, amplitude=0.3), 2.0)
    mass = np.array(trace.mass)
    assert np.all(np.diff(mass) < 0.0)
    assert max(trace.mass_defect) <= 1e-9
    assert max(trace.symmetry_defect) <= 1e-12


def test_initial_state_validation():
    with pytest.raises(ParameterError):
        initial_state(ProblemParams(1.0, 2))
    with pytest.raises(ParameterError):
        evolve(initial_state(P1), 0.0)


def test_critical_decay_law(critical):
    meta = critical.metadata
    assert meta["predicted_exponent"] == pytest.approx(-0.2)
    assert abs(meta["fitted_exponent"] / -0.2 - 1.0) < 0.1
    assert meta["compensated_drift_per_decade"] < 0.2
    assert meta["collapse_error"] < 0.1
    assert max(critical.mass_defect) <= 1e-9


def test_compensated_amplitude_approaches_centre_prediction(critical):
    coeffs = gamma_coefficients(P1)
    assert critical.metadata["compensated_end"] == pytest.approx(coeffs.gamma_star * C0, rel=0.05)


def test_regularization_robustness():
    trace = run_critical_experiment(10.0, check_regularization=True)
    assert trace.metadata["regularization_change"] < 0.01


def test_supercritical_convergence(supercritical):
    meta = supercritical.metadata
    assert meta["gamma"] == pytest.approx(0.4)
    assert meta["tail_mass_change"] < 1e-3
    distances = [d for _, d in meta["profile_distances"]]
    assert distances[-1] < 1e-2 * distances[0]
    # decreasing until the grid's O(h^2) floor, then flat to rounding
    assert np.all(np.diff(distances) <= 1e-6)
    mass = np.array(supercritical.mass)
    assert np.all(np.diff(mass) <= 0.0) and mass[-1] > 0.0


def test_supercritical_lyapunov_after_transient(supercritical):
    tau, energy = np.array(supercritical.tau), np.array(supercritical.lyapunov)
    late = tau >= 5.0
    assert np.min(np.diff(energy[late]) / np.diff(tau[late])) >= -1e-6


def test_supercritical_needs_exponent_above_critical():
    with pytest.raises(ParameterError):
        run_supercritical_experiment(5.0, 1.0)


def test_mass_matched_profile_has_requested_mass():
    y = np.linspace(-5, 5, 20001)
    F = mass_matched_profile(P1, 0.7, y)
    assert np.trapezoid(F, y) == pytest.approx(0.7, rel=1e-6)


def test_shape_collapse_of_exact_profile():
    b = 240.0
    support = b ** 0.25
    state = initial_state(P1, lambda y: np.where(np.abs(y) < support, b * C0 * (1 - y * y / b ** 0.5) ** 2, 0.0),
                          radius=support)
    assert shape_collapse_error(state) < 1e-12


def test_trace_csv_layout(critical):
    text = critical.to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == len(critical.tau) + 1
    assert text == critical.to_csv()


def test_default_data_shape():
    y = np.array([-2.0, 0.0, 0.5, 2.0])
    assert np.allclose(default_data(y, 2.0, 1.0), [0.0, 2.0, 2.0 * 0.75 ** 2, 0.0])
