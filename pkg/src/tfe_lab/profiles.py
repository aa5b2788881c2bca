"""Source-type similarity profiles.

Profiles solve the once-integrated radial profile equation

    |F|^n (Delta F)' = beta r F,     beta = 1 / (4 + n N),

either with a free boundary (``F = F' = 0`` at the interface ``r = a``) or,
for the Cauchy problem, as sign-changing solutions with oscillating
interfaces. Only ``r >= 0`` is stored; the profile is even.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ParameterError, ShootingFailure
from .kernels import STATUS_DONE, ThirdOrderProblem, integrate
from .numerics import scan_sign_changes, solve_bracketed, unit_ball_volume
from .params import ProblemParams, double_factorial, explicit_profile_constant

PROFILE_COLUMNS = ("y", "F", "dF", "d2F", "d3F")
FBP = "FBP"
CAUCHY = "CauchyProblem"

WKBJ_DECAY = 3.0 / 8.0 * 4.0 ** (-1.0 / 3.0)
WKBJ_FREQUENCY = math.sqrt(3.0) * WKBJ_DECAY


@dataclass(frozen=True)
class KernelBundle:
    """Decaying WKBJ bundle ``y^{-1/3} e^{-c1 y^{4/3}} (A1 cos + A2 sin)(c2 y^{4/3})``.

    ``s0`` is the phase in ``A1 cos t + A2 sin t = R cos(t - s0)``.
    """

    c1: float
    c2: float
    A1: float
    A2: float
    s0: float

    def as_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "A1": self.A1, "A2": self.A2, "s0": self.s0}


@dataclass(frozen=True)
class Profile:
    """Radial profile sampled on an increasing grid ``0 = y_0 < ... <= a``.

    Attributes
    ----------
    derivatives : ndarray, shape (M, 3)
        ``F', F'', F'''`` on the grid.
    interface : float
        Support radius (``inf`` for the whole-line fundamental kernel).
    second_deriv_origin : float
        ``F''(0)`` of the member of the scaling family with ``F(0) = 1``.
    normalization : str
        ``"F(0)=1"`` or ``"unit-mass"``: which member of the family is stored.
    """

    params: ProblemParams
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    interface: float
    mass: float
    problem_kind: str
    second_deriv_origin: float
    zero_count: int
    normalization: str = "F(0)=1"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "values", "derivatives"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.grid.ndim != 1 or self.values.shape != self.grid.shape:
            raise ParameterError("grid and values must be 1-D arrays of equal length")
        if self.derivatives.shape != (self.grid.size, 3):
            raise ParameterError("derivatives must have shape (len(grid), 3)")
        if np.any(np.diff(self.grid) <= 0):
            raise ParameterError("profile grid must be strictly increasing")

    def table(self) -> np.ndarray:
        """Columns ``y, F, dF, d2F, d3F``."""
        return np.column_stack([self.grid, self.values, self.derivatives])

    def resampled(self, points: int = 401) -> np.ndarray:
        """Table on a uniform grid over ``[0, grid[-1]]`` by cubic Hermite interpolation."""
        y = np.linspace(self.grid[0], self.grid[-1], points)
        f = CubicHermiteSpline(self.grid, self.values, self.derivatives[:, 0])(y)
        df = CubicHermiteSpline(self.grid, self.derivatives[:, 0], self.derivatives[:, 1])(y)
        d3 = self.derivatives[:, 2]
        finite = np.isfinite(d3)
        if finite.all():
            d2f = CubicHermiteSpline(self.grid, self.derivatives[:, 1], d3)(y)
        else:
            d2f = np.interp(y, self.grid, self.derivatives[:, 1])
        d3f = np.interp(y, self.grid[finite], d3[finite])
        return np.column_stack([y, f, df, d2f, d3f])

    def evaluate(self, y) -> np.ndarray:
        """``F`` at radii ``y`` (``|y|`` for negative input) by cubic Hermite interpolation.

        Points beyond the stored grid evaluate to 0 (outside the support).
        """
        r = np.abs(np.asarray(y, dtype=float))
        spline = CubicHermiteSpline(self.grid, self.values, self.derivatives[:, 0])
        return np.where(r <= self.grid[-1], spline(np.minimum(r, self.grid[-1])), 0.0)

    def ode_residual(self) -> np.ndarray:
        """Pointwise ``|F|^n (Delta F)' - beta r F`` on the grid."""
        return radial_residual(self.params, self.grid, self.values, self.derivatives)

    def to_csv(self, path=None, points: int | None = None) -> str:
        """Write ``y,F,dF,d2F,d3F`` with 17 significant digits.

        With ``points`` the profile is first resampled to a uniform grid.
        Returns the CSV text; also writes it when ``path`` is given.
        """
        rows = self.table() if points is None else self.resampled(points)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        for row in rows:
            writer.writerow([f"{v:.17g}" for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "problem_kind": self.problem_kind,
            "normalization": self.normalization,
            "interface": self.interface if math.isfinite(self.interface) else None,
            "mass": self.mass,
            "second_deriv_origin": self.second_deriv_origin,
            "zero_count": self.zero_count,
            "metadata": _jsonable(self.metadata),
            "columns": list(PROFILE_COLUMNS),
            "table": self.table().tolist(),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=1, allow_nan=True)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text

    def rescaled(self, factor: float) -> "Profile":
        """Member ``F_l(y) = l^{4/n} F(y / l)`` of the scaling family (``n > 0``)."""
        n = self.params.n
        if n <= 0.0:
            raise ParameterError("the scaling family needs n > 0")
        if not factor > 0.0:
            raise ParameterError("scaling factor must be positive")
        p = 4.0 / n
        scale = np.array([factor ** (p - 1), factor ** (p - 2), factor ** (p - 3)])
        dim = self.params.N
        return Profile(self.params, factor * self.grid, factor ** p * self.values,
                       self.derivatives * scale, factor * self.interface,
                       self.mass * factor ** (p + dim), self.problem_kind,
                       self.second_deriv_origin, self.zero_count, "rescaled",
                       dict(self.metadata))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def radial_residual(params: ProblemParams, r, F, derivs) -> np.ndarray:
    """Residual of ``|F|^n (F''' + (N-1)(F''/r - F'/r^2)) = beta r F``."""
    r = np.asarray(r, dtype=float)
    F = np.asarray(F, dtype=float)
    d1, d2, d3 = (np.asarray(derivs, dtype=float)[:, k] for k in range(3))
    lap_slope = d3.copy()
    if params.N > 1:
        inner = r > 0
        lap_slope[inner] += (params.N - 1) * (d2[inner] / r[inner] - d1[inner] / r[inner] ** 2)
    mob = np.abs(F) ** params.n if params.n > 0 else np.ones_like(F)
    return mob * lap_slope - params.beta * r * F


def _hermite_integral(x, h, dh) -> float:
    dx = np.diff(x)
    return float(np.sum(0.5 * dx * (h[:-1] + h[1:]) + dx ** 2 / 12.0 * (dh[:-1] - dh[1:])))


def radial_mass(N: int, r, F, dF) -> float:
    """``int_{R^N} F`` for a radial profile sampled with its slope."""
    r = np.asarray(r, dtype=float)
    weight = r ** (N - 1) if N > 1 else np.ones_like(r)
    dweight = (N - 1) * r ** (N - 2) if N > 1 else np.zeros_like(r)
    h = weight * F
    dh = dweight * F + weight * dF
    return N * unit_ball_volume(N) * _hermite_integral(r, h, dh)


def power_integral(profile: Profile, p: float) -> float:
    """``int |F|^{p-1} F`` over ``R^N`` (trapezoid on the stored grid)."""
    F = profile.values
    vals = np.abs(F) ** (p - 1) * F
    N = profile.params.N
    weight = profile.grid ** (N - 1) if N > 1 else np.ones_like(F)
    return float(N * unit_ball_volume(N) * np.trapz(weight * vals, profile.grid))


def _count_sign_changes(values: np.ndarray) -> int:
    s = np.sign(values)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


# --------------------------------------------------------------------------
# explicit n = 1 profiles


def explicit_profile_n1(N: int = 1, a: float | None = None, points: int = 801) -> Profile:
    """``F = c0 (a^2 - r^2)^2`` with ``c0 = 1 / (8 (N+2) (N+4))``.

    With ``a=None`` the interface is placed so that ``F(0) = 1``.
    """
    params = ProblemParams(n=1.0, N=N, m=2)
    c0_exact = Fraction(1, 8 * (N + 2) * (N + 4))
    c0 = float(c0_exact)
    if a is None:
        a = c0 ** -0.25
    if not a > 0:
        raise ParameterError("interface radius must be positive")
    r = np.linspace(0.0, a, points)
    gap = a * a - r * r
    F = c0 * gap ** 2
    derivs = np.column_stack([-4.0 * c0 * r * gap, -4.0 * c0 * (a * a - 3.0 * r * r), 24.0 * c0 * r])
    mass = c0 * unit_ball_volume(N) * a ** (N + 4) * 8.0 / ((N + 2) * (N + 4))
    return Profile(params, r, F, derivs, float(a), mass, FBP,
                   -4.0 * c0 * a * a * (c0 * a ** 4) ** -0.5, 0,
                   "F(0)=1" if abs(c0 * a ** 4 - 1.0) < 1e-12 else "interface",
                   {"c0": c0_exact})


def printed_profile_constant(m: int, N: int) -> Fraction:
    """Constant as printed alongside the general-``m`` closed form (with a factor 1/2)."""
    return Fraction(double_factorial(N), 2 * double_factorial(2 * m) * double_factorial(2 * m + N))


def explicit_profile_2m_n1(m: int = 2, N: int = 1, points: int = 801) -> Profile:
    """``F = c0 (1 - r^2)^m`` solving the order-``2m`` profile equation for ``n = 1``.

    ``c0`` is fixed by requiring ``Delta^{m-1} F`` to have ``r^2``-coefficient
    ``(-1)^m beta / 2``. The constant of the printed closed form is kept in
    ``metadata["printed_c0"]`` for comparison.
    """
    params = ProblemParams(n=1.0, N=N, m=m)
    c0_exact = explicit_profile_constant(m, N)
    printed = printed_profile_constant(m, N)
    c0 = float(c0_exact)
    poly = c0 * np.polynomial.Polynomial([1.0, 0.0, -1.0]) ** m
    r = np.linspace(0.0, 1.0, points)
    derivs = np.column_stack([poly.deriv(k)(r) for k in (1, 2, 3)])
    # mass: int_0^1 r^{N-1} (1 - r^2)^m dr = B(N/2, m + 1) / 2
    mass = c0 * N * unit_ball_volume(N) * 0.5 * math.exp(
        math.lgamma(N / 2) + math.lgamma(m + 1) - math.lgamma(N / 2 + m + 1))
    F = poly(r)
    meta = {"c0": c0_exact, "printed_c0": printed, "printed_matches": printed == c0_exact,
            "max_residual": float(np.max(np.abs(polyharmonic_residual(m, N, c0_exact))))}
    return Profile(params, r, F, derivs, 1.0, mass, FBP,
                   float(poly.deriv(2)(0.0)) * c0 ** (1 / 2 - 1), 0, "interface", meta)


def polyharmonic_residual(m: int, N: int, c0: Fraction) -> list[Fraction]:
    """Exact coefficients (in powers of ``r^2``) of ``Delta^{m-1}F - (-1)^m beta r^2 / 2``,
    dropping the constant term, for ``F = c0 (1 - r^2)^m``."""
    coeffs = [c0 * math.comb(m, k) * (-1) ** k for k in range(m + 1)]
    for _ in range(m - 1):
        coeffs = [coeffs[k + 1] * (2 * (k + 1)) * (2 * (k + 1) + N - 2)
                  for k in range(len(coeffs) - 1)]
    beta = Fraction(1, 2 * m + N)
    out = list(coeffs[1:])
    out[0] -= (-1) ** m * beta / 2
    return out


# --------------------------------------------------------------------------
# interface expansions


def _lattice_mul(p: dict, q: dict, order: int) -> dict:
    out: dict = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            key = (i1 + i2, j1 + j2)
            if key[0] + key[1] <= order:
                out[key] = out.get(key, 0.0) + c1 * c2
    return out


def _lattice_unit_power(u: dict, alpha: float, order: int) -> dict:
    """``(1 + u)^alpha`` for a lattice series ``u`` without constant term."""
    out = {(0, 0): 1.0}
    term = {(0, 0): 1.0}
    coef = 1.0
    for r in range(1, order + 1):
        term = _lattice_mul(term, u, order)
        coef *= (alpha - r + 1) / r
        if not term:
            break
        for key, val in term.items():
            out[key] = out.get(key, 0.0) + coef * val
    return out


@dataclass(frozen=True)
class InterfaceExpansion:
    """Local solution of ``F_xxx = -beta (1 - x) F^{1-n}`` at ``x = 1 - y -> 0``.

    Regimes
    -------
    ``"quadratic"`` (n < 3/2)
        ``F = A x^2 sum d_ij x^{i + j e}``, ``e = 3 - 2n``; free amplitude ``A``.
    ``"logarithmic"`` (n = 3/2)
        ``F = x^2 ((3 beta/4)(L + K))^{2/3} (1 - ln(L+K) / (3 (L+K)))``,
        ``L = -ln x``; free shift ``K``.
    ``"power"`` (3/2 < n < 3)
        ``F = B x^{3/n} sum c_ij x^{i + j lam}``, ``B`` fixed by the equation,
        ``lam`` the unstable root at the constant solution; free ``D = c_01``.
    """

    n: float
    beta: float
    regime: str
    leading_exponent: float
    correction_exponent: float
    order: int
    log_factor: float | None = None

    MAX_ORDER = 12

    def terms(self, free: float) -> list[tuple[float, float]]:
        """``(exponent, coefficient)`` pairs of the series (support radius 1)."""
        if self.regime == "logarithmic":
            raise ParameterError("the logarithmic regime has no power series")
        if self.regime == "quadratic":
            coeffs = self._quadratic(free)
            lead = free
        else:
            coeffs = self._power(free)
            lead = self._power_amplitude()
        e = self.correction_exponent
        return [(self.leading_exponent + i + j * e, lead * c) for (i, j), c in sorted(coeffs.items())]

    def _quadratic(self, amp: float) -> dict:
        n, e, order = self.n, self.correction_exponent, self.order
        d = {(0, 0): 1.0}
        one_minus_x = {(0, 0): 1.0, (1, 0): -1.0}
        for j in range(1, order + 1):
            u = {k: v for k, v in d.items() if k != (0, 0)}
            w = _lattice_mul(one_minus_x, _lattice_unit_power(u, 1.0 - n, order), order)
            for i in range(0, order - j + 1):
                k = i + j * e
                src = w.get((i, j - 1), 0.0)
                if src:
                    d[(i, j)] = -self.beta * amp ** (-n) * src / ((k + 2) * (k + 1) * k)
        return d

    def _power_amplitude(self) -> float:
        mu = self.leading_exponent
        return (-self.beta / (mu * (mu - 1) * (mu - 2))) ** (1.0 / self.n)

    def _power(self, pert: float) -> dict:
        n, lam, order = self.n, self.correction_exponent, self.order
        mu = self.leading_exponent
        cubic = lambda z: z * (z - 1) * (z - 2)  # noqa: E731
        c = {(0, 0): 1.0, (0, 1): pert}
        one_minus_x = {(0, 0): 1.0, (1, 0): -1.0}
        keys = sorted(((i, j) for i in range(order + 1) for j in range(order + 1 - i)),
                      key=lambda ij: (ij[0] + ij[1], ij[1]))
        for key in keys:
            if key in c:
                continue
            k = key[0] + key[1] * lam
            u = {kk: v for kk, v in c.items() if kk != (0, 0)}
            w = _lattice_mul(one_minus_x, _lattice_unit_power(u, 1.0 - n, order), order)
            denom = cubic(mu + k) - (1.0 - n) * cubic(mu)
            if abs(denom) < 1e-10:
                raise ParameterError(f"resonant interface exponent at n={n}")
            val = cubic(mu) * w.get(key, 0.0) / denom
            if val:
                c[key] = val
        return c

    def evaluate(self, x: float, free: float) -> tuple[float, float, float]:
        """``(F, F_x, F_xx)`` at distance ``x`` from an interface of radius 1."""
        if self.regime == "logarithmic":
            return self._log_evaluate(x, free)
        F = dF = d2F = 0.0
        for p, c in self.terms(free):
            F += c * x ** p
            dF += c * p * x ** (p - 1)
            d2F += c * p * (p - 1) * x ** (p - 2)
        return F, dF, d2F

    def _log_evaluate(self, x: float, shift: float) -> tuple[float, float, float]:
        big = -math.log(x) + shift
        if big <= 1.0:
            raise ParameterError("launch point too far from the interface for the log expansion")
        c = 0.75 * self.beta
        g = (c * big) ** (2.0 / 3.0)
        g1, g2 = 2.0 / 3.0 * g / big, -2.0 / 9.0 * g / big ** 2
        if self.order >= 2:
            h = 1.0 - math.log(big) / (3.0 * big)
            h1 = -(1.0 - math.log(big)) / (3.0 * big ** 2)
            h2 = (3.0 - 2.0 * math.log(big)) / (3.0 * big ** 3)
        else:
            h, h1, h2 = 1.0, 0.0, 0.0
        f, f1, f2 = g * h, g1 * h + g * h1, g2 * h + 2 * g1 * h1 + g * h2
        # F = x^2 f(L), d/dx = -(1/x) d/dL
        return x * x * f, x * (2.0 * f - f1), 2.0 * f - 3.0 * f1 + f2


def _unstable_root(n: float) -> float:
    mu = 3.0 / n
    cubic = np.poly1d([1.0, -3.0, 2.0, 0.0])
    shifted = np.polyval(cubic, np.poly1d([1.0, mu])) - (1.0 - n) * mu * (mu - 1) * (mu - 2)
    roots = [r.real for r in np.roots(shifted) if abs(r.imag) < 1e-10 and r.real > 1e-9]
    if len(roots) != 1:
        raise ParameterError(f"no single growing interface mode at n={n}: {np.roots(shifted)}")
    return roots[0]


def interface_expansion(params: ProblemParams, order: int = 4) -> InterfaceExpansion:
    """Local expansion of a free-boundary profile at its interface (``N = 1``)."""
    n = params.n
    if not 0.0 < n < 3.0:
        raise ParameterError("interface expansion needs 0 < n < 3")
    if order < 1 or order > InterfaceExpansion.MAX_ORDER:
        raise ParameterError(f"order must be within 1..{InterfaceExpansion.MAX_ORDER}")
    beta = params.beta
    if abs(n - 1.5) < 1e-12:
        return InterfaceExpansion(n, beta, "logarithmic", 2.0, 0.0, order,
                                  log_factor=(0.75 * beta) ** (2.0 / 3.0))
    if n < 1.5:
        return InterfaceExpansion(n, beta, "quadratic", 2.0, 3.0 - 2.0 * n, order)
    return InterfaceExpansion(n, beta, "power", 3.0 / n, _unstable_root(n), order)


# --------------------------------------------------------------------------
# free-boundary shooting


def _fbp_launch(exp: InterfaceExpansion, a: float, branch: float, rel_gap: float):
    """Launch data at distance ``rel_gap * a`` from an interface of radius ``a``.

    The free parameter is chosen so that the member with radius ``a`` has unit
    leading amplitude (quadratic), zero log-shift, or ``D = branch`` (power).
    """
    n = exp.n
    p = 4.0 / n
    if exp.regime == "quadratic":
        free = a ** (2.0 - p)
    elif exp.regime == "logarithmic":
        free = -math.log(a)
    else:
        free = branch * a ** exp.correction_exponent
    F, dF, d2F = exp.evaluate(rel_gap, free)
    return np.array([a ** p * F, a ** (p - 1) * dF, a ** (p - 2) * d2F])


def _fbp_run(params, exp, a, branch, rel_gap, rtol, t_eval=()):
    state = _fbp_launch(exp, a, branch, rel_gap)
    prob = ThirdOrderProblem(0.0, 0.0, 0.0, params.n, params.beta * a, -params.beta, 0.0)
    atol = 1e-6 * rtol * abs(state[0])
    return integrate(prob, rel_gap * a, state, a, rtol=rtol, atol=atol,
                     h_win=1e-9 * a, t_eval=t_eval, max_zeros=1)


def shoot_fbp_profile(params: ProblemParams, *, support_range=(0.05, 200.0), scan_points: int = 48,
                      rel_gap: float = 1e-7, rtol: float = 1e-12, order: int = 6,
                      points: int = 800) -> Profile:
    """Free-boundary profile of ``|F|^n F''' = beta y F`` (``N = 1``) by shooting from the interface.

    The launch follows :func:`interface_expansion`; the unknown is the support
    radius ``a`` of the unit-amplitude family member, fixed by ``F'(0) = 0``.
    The result is rescaled to ``F(0) = 1``.

    Raises
    ------
    ShootingFailure
        No admissible (positive) match in ``support_range``.
    """
    n = params.n
    if params.N != 1 or params.m != 2:
        raise ParameterError("shooting is implemented for N = 1, m = 2")
    if not 0.0 < n < 3.0:
        raise ParameterError("shoot_fbp_profile needs 0 < n < 3")
    exp = interface_expansion(params, order)
    branches = (1.0, -1.0) if exp.regime == "power" else (0.0,)
    grid = np.geomspace(*support_range, scan_points)
    matches = []
    for branch in branches:
        def slope(a, branch=branch):
            return _fbp_run(params, exp, a, branch, rel_gap, rtol).state[1]

        for lo, hi in scan_sign_changes(slope, grid):
            a_star = solve_bracketed(slope, (lo, hi), tol=1e-14)
            res = _fbp_run(params, exp, a_star, branch, rel_gap, rtol)
            if res.status == STATUS_DONE and res.state[0] > 0:
                matches.append((a_star, branch))
    if not matches:
        raise ShootingFailure(f"no admissible free-boundary profile for n={n} in {support_range}")
    a_star, branch = matches[0]
    x_grid = _fbp_grid(a_star, rel_gap, points)
    res = _fbp_run(params, exp, a_star, branch, rel_gap, rtol, t_eval=x_grid)
    if res.status != STATUS_DONE:
        raise ShootingFailure(f"final profile run ended with {res.status_name}")
    samples = res.samples
    F = samples[::-1, 0]
    if np.any(F[:-1] <= 0.0):
        raise ShootingFailure("computed free-boundary profile is not positive")
    y = a_star - x_grid[::-1]
    y[0] = 0.0
    d1 = -samples[::-1, 1]
    d2 = samples[::-1, 2]
    d3 = params.beta * y * np.abs(F) ** (1.0 - n) * np.sign(F)
    lam = F[0] ** (-n / 4.0)
    p = 4.0 / n
    derivs = np.column_stack([d1 * lam ** (p - 1), d2 * lam ** (p - 2), d3 * lam ** (p - 3)])
    values = F * lam ** p
    grid = y * lam
    mass = radial_mass(1, grid, values, derivs[:, 0])
    meta = {"interface_regime": exp.regime, "matches": [m[0] * lam for m in matches],
            "launch_gap": rel_gap * a_star * lam, "branch": branch}
    return Profile(params, grid, values, derivs, a_star * lam, mass, FBP,
                   float(derivs[0, 1]), _count_sign_changes(values), "F(0)=1", meta)


def _fbp_grid(a: float, rel_gap: float, points: int) -> np.ndarray:
    near = np.geomspace(rel_gap * a, 0.05 * a, points // 4)
    far = np.linspace(0.05 * a, a, points - points // 4 + 1)[1:]
    return np.concatenate([near, far])


# --------------------------------------------------------------------------
# Cauchy problem


def _cp_origin_data(params, orbit, s0, s_start, rtol, t_eval=()):
    from .orbits import oscillatory_coefficients

    n = params.n
    a2, a1, a0 = oscillatory_coefficients(n)
    beta = params.beta
    prob = ThirdOrderProblem(a2, a1, a0, n, beta, 0.0, -beta)
    amp = beta ** (1.0 / n)
    state = amp * orbit.state_at(s_start + s0)
    res = integrate(prob, s_start, state, 0.0, rtol=rtol, atol=1e-3 * rtol * amp * orbit.amplitude,
                    h_win=1e-9, t_eval=t_eval)
    if res.status != STATUS_DONE:
        raise ShootingFailure(f"Cauchy-problem run ended with {res.status_name}")
    return res


def _phi_to_profile(mu, s, phi):
    """Convert ``phi(s)`` samples to ``F, F_y, F_yy`` with ``y = 1 - e^s``."""
    p, dp, d2p = phi[:, 0], phi[:, 1], phi[:, 2]
    F = np.exp(mu * s) * p
    Fy = -np.exp((mu - 1) * s) * (mu * p + dp)
    Fyy = np.exp((mu - 2) * s) * (mu * (mu - 1) * p + (2 * mu - 1) * dp + d2p)
    return F, Fy, Fyy


@lru_cache(maxsize=1)
def _bifurcation_exponent() -> float:
    from .orbits import heteroclinic_connection_exponent

    return heteroclinic_connection_exponent()


def shoot_cp_profile(n: float, *, s_start: float = -30.0, scan_points: int = 48,
                     rtol: float = 1e-12, points: int = 2000) -> Profile:
    """Oscillatory Cauchy-problem profile of ``|F|^n F''' = beta y F`` (``N = 1``).

    Near the interface ``F = (1 - y)^{3/n} phi(ln(1 - y))`` follows the
    periodic orbit up to a phase ``s0``; the phase is shot so that
    ``F'(0) = 0`` with ``F(0) > 0``. The stored profile has unit mass;
    ``second_deriv_origin`` refers to the ``F(0) = 1`` member.
    ``n = 0`` delegates to :func:`fundamental_kernel`.
    """
    if n == 0.0:
        return fundamental_kernel()[0]
    if not n > 0.0:
        raise ParameterError("n must be non-negative")
    n_h = _bifurcation_exponent()
    if n >= n_h:
        raise ParameterError(f"no oscillatory bundle for n >= n_h = {n_h:.10f}")
    from .orbits import find_periodic_orbit

    params = ProblemParams(n=n, N=1, m=2)
    mu = 3.0 / n
    orbit = find_periodic_orbit(n, compute_floquet=False)

    def origin(s0):
        st = _cp_origin_data(params, orbit, s0, s_start, rtol).state
        return st

    def slope(s0):
        p, dp, _ = origin(s0)
        return -(mu * p + dp)

    phases = np.linspace(0.0, orbit.period, scan_points + 1)
    roots = []
    for lo, hi in scan_sign_changes(slope, phases):
        s0 = solve_bracketed(slope, (lo, hi), tol=1e-14)
        if origin(s0)[0] > 0:
            roots.append(s0)
    if not roots:
        raise ShootingFailure(f"no phase with F'(0)=0 and F(0)>0 at n={n}")
    s0 = roots[0]
    # below this depth 1 - e^s is not distinguishable from 1 in double precision
    s = np.linspace(max(s_start, math.log(1e3 * np.finfo(float).eps)), 0.0, points)
    res = _cp_origin_data(params, orbit, s0, s_start, rtol, t_eval=s)
    F, Fy, Fyy = _phi_to_profile(mu, s, res.samples)
    y = 1.0 - np.exp(s)
    order = np.argsort(y)
    y, F, Fy, Fyy = y[order], F[order], Fy[order], Fyy[order]
    y[0] = 0.0
    Fy[0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        Fyyy = np.where(F != 0.0, params.beta * y * np.sign(F) * np.abs(F) ** (1.0 - n),
                        0.0 if n < 1.0 else np.nan)
    f0, f2 = F[0], Fyy[0]
    curvature = f2 * f0 ** (n / 2.0 - 1.0)
    mass1 = radial_mass(1, y, F, Fy)
    lam = mass1 ** (-n / (4.0 + n))
    p = 4.0 / n
    derivs = np.column_stack([Fy * lam ** (p - 1), Fyy * lam ** (p - 2), Fyyy * lam ** (p - 3)])
    values = F * lam ** p
    grid = y * lam
    mass = radial_mass(1, grid, values, derivs[:, 0])
    meta = {"phase": s0, "phases_found": roots, "orbit_period": orbit.period,
            "s_start": s_start, "height_normalized_interface": f0 ** (-n / 4.0)}
    return Profile(params, grid, values, derivs, lam, mass, CAUCHY, float(curvature),
                   _count_sign_changes(values), "unit-mass", meta)


# --------------------------------------------------------------------------
# n = 0: the fundamental kernel and its free-boundary approximations


def _wkbj_launch(y: float) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of ``y^{-1/3} exp(a y^{4/3})`` and two derivatives."""
    a = complex(-WKBJ_DECAY, WKBJ_FREQUENCY)
    w = y ** (-1.0 / 3.0) * np.exp(a * y ** (4.0 / 3.0))
    g = -1.0 / (3.0 * y) + 4.0 / 3.0 * a * y ** (1.0 / 3.0)
    g1 = 1.0 / (3.0 * y * y) + 4.0 / 9.0 * a * y ** (-2.0 / 3.0)
    vals = np.array([w, w * g, w * (g * g + g1)])
    return vals.real, vals.imag


def _linear_inward(state_at_far, far: float, rtol: float, t_eval=()):
    # y-space run in t = -y: x(t) = F(-t), x' = -F', x'' = F''
    prob = ThirdOrderProblem(0.0, 0.0, 0.0, 0.0, 0.0, -0.25, 0.0)
    F, dF, d2F = state_at_far
    scale = max(abs(F), abs(dF), abs(d2F))
    return integrate(prob, -far, (F, -dF, d2F), 0.0, rtol=rtol, atol=1e-6 * rtol * scale,
                     t_eval=t_eval)


def fundamental_kernel(tol: float = 1e-10, *, points: int = 1200) -> tuple[Profile, KernelBundle]:
    """Rescaled fundamental solution of ``F''' = y F / 4`` on the line, unit mass.

    The two decaying WKBJ solutions are integrated inward from a radius where
    the envelope has fallen to ``tol``; the growing mode decays in that
    direction, so the combination with ``F'(0) = 0`` is well conditioned.
    """
    if not 0.0 < tol < 1e-2:
        raise ParameterError("tol must lie in (0, 1e-2)")
    far = (math.log(1.0 / tol) / WKBJ_DECAY) ** 0.75
    re, im = _wkbj_launch(far)
    t_eval = -np.linspace(far, 0.0, points)
    runs = [_linear_inward(v, far, tol * 1e-2, t_eval) for v in (re, im)]
    for r in runs:
        if r.status != STATUS_DONE:
            raise ShootingFailure(f"kernel run ended with {r.status_name}")
    end = np.array([[r.state[0], -r.state[1]] for r in runs]).T  # rows F(0), F'(0)
    coef = np.linalg.solve(end, np.array([1.0, 0.0]))
    samples = coef[0] * runs[0].samples + coef[1] * runs[1].samples
    y = -t_eval[::-1]
    F = samples[::-1, 0]
    d1 = -samples[::-1, 1]
    d2 = samples[::-1, 2]
    y[0] = 0.0
    d1[0] = 0.0
    d3 = 0.25 * y * F
    curvature = d2[0] / F[0]
    mass = radial_mass(1, y, F, d1)
    params = ProblemParams(n=0.0, N=1, m=2)
    derivs = np.column_stack([d1, d2, d3]) / mass
    resid = np.linalg.norm(end @ coef - np.array([1.0, 0.0]))
    bundle = KernelBundle(WKBJ_DECAY, WKBJ_FREQUENCY, coef[0] / mass, coef[1] / mass,
                          math.atan2(coef[1], coef[0]))
    meta = {"matching_radius": far, "matching_residual": resid, **bundle.as_dict()}
    profile = Profile(params, y, F / mass, derivs, math.inf, 1.0, CAUCHY, float(curvature),
                      _count_sign_changes(F), "unit-mass", meta)
    return profile, bundle


def sup_distance(first: Profile, second: Profile, window: float) -> float:
    """``max |F_1 - F_2|`` over ``[-window, window]`` on the union of both grids."""
    pts = np.union1d(first.grid, second.grid)
    pts = pts[pts <= window]
    return float(np.max(np.abs(first.evaluate(pts) - second.evaluate(pts))))


def _kernel_fbp_run(support: float, rtol: float, t_eval=()):
    return _linear_inward((0.0, 0.0, 1.0), support, rtol, t_eval)


def fbp_kernel_sequence(k: int, *, rtol: float = 1e-12, points: int = 1200) -> Profile:
    """Free-boundary profile of ``F''' = y F / 4`` on ``(-y_k, y_k)`` (unit mass).

    Solutions with ``F(y_k) = F'(y_k) = 0`` and ``F'(0) = 0`` occur for a
    discrete increasing sequence of radii; counting the positive one as
    ``k = 0``, the ``k``-th radius is returned. ``zero_count`` is measured on
    the computed profile, not assumed.
    """
    if int(k) != k or k < 1:
        raise ParameterError("k must be an integer >= 1")
    k = int(k)

    def slope(support):
        st = _kernel_fbp_run(support, rtol).state
        return -st[1] / max(np.max(np.abs(st)), 1e-300)

    top = (math.pi * (k + 2) / WKBJ_FREQUENCY) ** 0.75 + 1.0
    radii = np.linspace(0.3, top, 60 * (k + 2))
    brackets = scan_sign_changes(slope, radii)
    if len(brackets) < k + 1:
        raise ShootingFailure(f"found only {len(brackets)} free-boundary radii below {top:.3f}")
    support = solve_bracketed(slope, brackets[k], tol=1e-14)
    t_eval = -np.linspace(support, 0.0, points)
    res = _kernel_fbp_run(support, rtol, t_eval)
    if res.status != STATUS_DONE:
        raise ShootingFailure(f"free-boundary kernel run ended with {res.status_name}")
    y = -t_eval[::-1]
    y[0] = 0.0
    F = res.samples[::-1, 0]
    d1 = -res.samples[::-1, 1]
    d1[0] = 0.0
    d2 = res.samples[::-1, 2]
    d3 = 0.25 * y * F
    mass = radial_mass(1, y, F, d1)
    params = ProblemParams(n=0.0, N=1, m=2)
    derivs = np.column_stack([d1, d2, d3]) / mass
    ratio = support / (math.pi * k / WKBJ_FREQUENCY) ** 0.75
    return Profile(params, y, F / mass, derivs, support, 1.0, FBP, float(d2[0] / F[0]),
                   _count_sign_changes(F[1:-1]), "unit-mass",
                   {"index": k, "asymptotic_ratio": ratio})
