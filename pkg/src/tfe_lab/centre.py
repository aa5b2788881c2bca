"""Centre-subspace reduction at the critical absorption exponent.

Projecting the rescaled perturbation equation on the zero mode ``psi_0`` gives
``a_0' = -gamma1 b'/b - gamma2 b^{p-1} + ...``. Balancing the two terms fixes
the decay ``b(tau) = gamma_* tau^{-1/(p-1)}`` and, back in the original
variables, a logarithmically corrected self-similar pattern.

Coefficients are available for ``n = 1`` only, where the operator is
self-adjoint and ``psi_0`` is explicit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericalError, ParameterError
from .numerics import quad_weighted, unit_ball_volume
from .params import ProblemParams, critical_absorption_exponent, explicit_profile_constant
from .spectral import polynomial_eigenfunctions


def critical_exponent(n: float, N: int, m: int = 2) -> float:
    """Critical absorption exponent ``p0 = 1 + n + 2m/N``.

    Raises
    ------
    ParameterError
        ``n < 0``, ``N < 1`` or ``m < 2``.
    """
    if not n >= 0.0 or int(N) != N or N < 1 or int(m) != m or m < 2:
        raise ParameterError("need n >= 0, integer N >= 1 and integer m >= 2")
    return critical_absorption_exponent(n, int(N), int(m))


def centre_operator_C(r, w, dw, n: float) -> np.ndarray:
    """``C w = (n/4) r w'(r) - w`` for a radial function sampled with its derivative."""
    r = np.asarray(r, dtype=float)
    return 0.25 * n * r * np.asarray(dw, dtype=float) - np.asarray(w, dtype=float)


@dataclass(frozen=True)
class CentreCoefficients:
    """Coefficients of the projected amplitude equation.

    ``gamma1 = -<C F, psi_0>_rho``, ``gamma2 = <F^p, psi_0>_rho``,
    ``gamma_star = [(p - 1) gamma2 / gamma1]^{-1/(p-1)}`` and ``a_star = gamma_star^{n/4}``.
    """

    params: ProblemParams
    gamma1: float
    gamma2: float
    gamma_star: float
    a_star: float

    @property
    def decay_exponent(self) -> float:
        """``1/(p - 1)``; equals ``beta N`` at ``p = p0``."""
        return 1.0 / (self.params.p - 1.0)

    def as_dict(self) -> dict:
        p = self.params
        return {"n": p.n, "N": p.N, "m": p.m, "p0": p.p0, "beta": p.beta,
                "gamma1": self.gamma1, "gamma2": self.gamma2,
                "gamma_star": self.gamma_star, "a_star": self.a_star}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=1)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _balance_constant(p: float, gamma1: float, gamma2: float) -> float:
    return ((p - 1.0) * gamma2 / gamma1) ** (-1.0 / (p - 1.0))


def gamma_coefficients(params: ProblemParams, *, rtol: float = 1e-12) -> CentreCoefficients:
    """Projection coefficients for ``n = 1``, ``m = 2`` at ``p = p0``.

    ``F = c0 (1 - r^2)^2`` (unit support) and ``psi_0 = b0 (r^2 - 1)``; the
    ``rho``-weighted integrals over the unit ball are evaluated by graded
    Gauss-Legendre quadrature. The integrands vanish at ``r = 1``, so the weight
    ``1/(1 - r^2)`` needs no special treatment.

    Raises
    ------
    ParameterError
        ``n != 1``, ``m != 2`` or ``p != p0``.
    NumericalError
        A coefficient is not strictly positive.
    """
    if params.n != 1.0 or params.m != 2:
        raise ParameterError("centre coefficients need n = 1 and m = 2 (explicit zero mode)")
    if abs(params.p - params.p0) > 1e-12 * params.p0:
        raise ParameterError(f"centre coefficients need the critical exponent p0 = {params.p0}")
    N, p = params.N, params.p
    c0 = float(explicit_profile_constant(2, N))
    spectrum = polynomial_eigenfunctions(N, 0)
    surface = N * unit_ball_volume(N)

    def psi0(r):
        return spectrum.evaluate(0, r)

    def profile(r):
        return c0 * (1.0 - r * r) ** 2

    def slope(r):
        return -4.0 * c0 * r * (1.0 - r * r)

    def weighted(values, r):
        return values * psi0(r) / (1.0 - r * r) * r ** (N - 1)

    def project_c(r):
        return weighted(centre_operator_C(r, profile(r), slope(r), params.n), r)

    def project_absorption(r):
        return weighted(profile(r) ** p, r)

    gamma1 = float(-surface * quad_weighted(project_c, (0.0, 1.0), 1.0, rtol))
    gamma2 = float(surface * quad_weighted(project_absorption, (0.0, 1.0), 2.0 * p, rtol))
    if not (gamma1 > 0.0 and gamma2 > 0.0):
        raise NumericalError(f"non-positive projection coefficient: gamma1={gamma1}, gamma2={gamma2}")
    gamma_star = float(_balance_constant(p, gamma1, gamma2))
    return CentreCoefficients(params, gamma1, gamma2, gamma_star, gamma_star ** (params.n / 4.0))


def predicted_amplitude(tau, coeffs: CentreCoefficients):
    """Balanced decay ``b(tau) = gamma_* tau^{-1/(p-1)}``.

    Raises
    ------
    ParameterError
        ``tau <= 1``.
    """
    t = np.asarray(tau, dtype=float)
    if np.any(t <= 1.0):
        raise ParameterError("predicted amplitude needs tau > 1")
    out = coeffs.gamma_star * t ** (-coeffs.decay_exponent)
    return float(out) if out.ndim == 0 else out


def matched_ode_rate(b, coeffs: CentreCoefficients):
    """Right-hand side of ``b' = -(gamma2/gamma1) b^p`` (the balance ``b'/b = -(gamma2/gamma1) b^{p-1}``)."""
    return -(coeffs.gamma2 / coeffs.gamma1) * np.asarray(b, dtype=float) ** coeffs.params.p


def matched_ode_solution(tau, b_initial: float, tau_initial: float, coeffs: CentreCoefficients):
    """Exact solution of the balance ODE through ``b(tau_initial) = b_initial > 0``.

    ``b^{1-p}`` grows linearly: ``b(tau) = [b_i^{1-p} + (p-1)(gamma2/gamma1)(tau - tau_i)]^{-1/(p-1)}``.
    """
    if not b_initial > 0.0:
        raise ParameterError("initial amplitude must be positive")
    p = coeffs.params.p
    t = np.asarray(tau, dtype=float)
    base = b_initial ** (1.0 - p) + (p - 1.0) * coeffs.gamma2 / coeffs.gamma1 * (t - tau_initial)
    out = base ** (-1.0 / (p - 1.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PatternEvaluator:
    """``u(x, t) ~ (t ln t)^{-beta N} F_*(x t^{-beta} (ln t)^{beta N n/4})`` with ``F_* = F_{a_*}``.

    For ``n = 1`` the profile is ``F_*(y) = c0 (a_*^2 - |y|^2)^2``.
    """

    params: ProblemParams
    a_star: float

    @property
    def c0(self) -> float:
        return float(explicit_profile_constant(2, self.params.N))

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= math.e):
            raise ParameterError("the pattern is evaluated for t > e")
        return t

    def _scales(self, t):
        beta, N, n = self.params.beta, self.params.N, self.params.n
        log_t = np.log(t)
        amplitude = (t * log_t) ** (-beta * N)
        length = t ** beta * log_t ** (-beta * N * n / 4.0)
        return amplitude, length

    def profile(self, y) -> np.ndarray:
        """``F_*(y)``, zero outside ``|y| < a_*``."""
        y = np.abs(np.asarray(y, dtype=float))
        gap = self.a_star ** 2 - y * y
        return np.where(gap > 0.0, self.c0 * gap ** 2, 0.0)

    def support_radius(self, t):
        """``a_* t^beta (ln t)^{-beta N n/4}``."""
        _, length = self._scales(self._check_time(t))
        return self.a_star * length

    def __call__(self, x, t):
        t = self._check_time(t)
        amplitude, length = self._scales(t)
        out = amplitude * self.profile(np.asarray(x, dtype=float) / length)
        return float(out) if np.ndim(out) == 0 else out

    def mass(self, t):
        """``int u dx`` of the pattern over ``R^N``."""
        amplitude, length = self._scales(self._check_time(t))
        N = self.params.N
        # int_{|y|<a} c0 (a^2 - y^2)^2 dy = c0 a^{N+4} * 8 omega_N / ((N+2)(N+4))
        profile_mass = self.c0 * self.a_star ** (N + 4) * 8.0 * unit_ball_volume(N) / ((N + 2) * (N + 4))
        return amplitude * length ** N * profile_mass


def evaluate_pattern(x, t, coeffs: CentreCoefficients):
    """Value of the logarithmically corrected pattern at ``(x, t)``, ``t > e``."""
    return PatternEvaluator(coeffs.params, coeffs.a_star)(x, t)


def pattern_mass_exponents(n, N: int) -> tuple[Fraction, Fraction]:
    """Exact exponents ``(e_t, e_log)`` with ``mass ~ t^{e_t} (ln t)^{e_log}`` for the pattern.

    With ``beta = 1/(4 + nN)``: ``e_t = -beta N + beta N = 0`` and
    ``e_log = -beta N - beta N^2 n / 4``.
    """
    n = Fraction(n)
    beta = 1 / (4 + n * N)
    return -beta * N + beta * N, -beta * N - beta * N * N * n / 4
