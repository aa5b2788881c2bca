"""The compiled and pure-Python third-order kernels agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfe_lab import kernels
from tfe_lab.kernels import STATUS_DONE, ThirdOrderProblem, integrate
from tfe_lab.orbits import oscillatory_problem

compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")


def _run(problem, backend, state=(0.0, 1.0, 0.0), t_end=6.0, **kw):
    return integrate(problem, 0.0, state, t_end, rtol=1e-11, atol=1e-14, h_win=1e-8,
                     t_eval=np.linspace(0.5, t_end, 12), backend=backend, **kw)


def test_linear_problem_against_exponential():
    # x''' = x has the solution e^t
    problem = ThirdOrderProblem(0.0, 0.0, -1.0, 0.0, g0=0.0)
    res = integrate(problem, 0.0, (1.0, 1.0, 1.0), 2.0, rtol=1e-12, atol=1e-15, backend="python")
    assert res.status == STATUS_DONE
    assert res.state == pytest.approx([math.exp(2.0)] * 3, rel=1e-9)


@compiled
@pytest.mark.parametrize("n", [0.5, 1.0, 1.5])
def test_backends_agree_on_oscillation(n):
    problem = oscillatory_problem(n)
    py = _run(problem, "python")
    cy = _run(problem, "cython")
    assert py.status == cy.status
    assert np.allclose(py.state, cy.state, rtol=1e-12, atol=1e-14)
    assert np.allclose(py.samples, cy.samples, rtol=1e-12, atol=1e-14)
    assert np.allclose(py.zeros, cy.zeros, rtol=1e-12, atol=1e-14)
    assert py.nsteps == cy.nsteps


@compiled
@given(st.floats(min_value=0.1, max_value=1.7), st.floats(min_value=-1.0, max_value=1.0))
def test_backends_agree_for_random_data(n, slope):
    problem = oscillatory_problem(n)
    py = _run(problem, "python", (0.01, slope, 0.0), t_end=3.0)
    cy = _run(problem, "cython", (0.01, slope, 0.0), t_end=3.0)
    assert py.status == cy.status
    assert np.allclose(py.state, cy.state, rtol=1e-10, atol=1e-13)


def test_pure_environment_variable_forces_python_backend():
    code = "from tfe_lab import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, TFE_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
