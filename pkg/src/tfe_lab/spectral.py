"""Linearized operator around the similarity profile.

For ``n = 1`` the operator is self-adjoint in ``L^2_rho`` with ``rho = 1/(1 - r^2)``
and has polynomial eigenfunctions. This module provides the closed-form
spectrum, the exact polynomial eigenfunctions, finite-difference
discretizations (symmetric for ``n = 1``, general for ``n != 1``), the
zero mode generated by the scaling group and an exact-arithmetic test of
whether the ``n != 1`` operator can be symmetric in ``L^2_rho``.

Sign convention: discretizations represent ``B = -A'(F)``, whose ``n = 1``
eigenvalues ``c0 k (k+2) (k+N) (k+N+2)`` are non-negative.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicHermiteSpline

from .errors import NumericalError, ParameterError
from .numerics import (Poly, RationalSeries, eig_banded_symmetric, quad_weighted, series_diff,
                       series_mul, series_pow)
from .numerics.eig import to_upper_band
from .numerics.quadrature import unit_ball_volume
from .params import ProblemParams, explicit_profile_constant
from .profiles import FBP, Profile, shoot_fbp_profile

SIGN_POSITIVE = "positive"
SIGN_OPERATOR = "operator"
VARIANT_DERIVED = "derived"
VARIANT_PRINTED = "printed"

VERDICT_SYMMETRIC = "symmetric"
VERDICT_NOT_SYMMETRIC = "not-symmetric"
VERDICT_DEGENERATE = "degenerate"

COARSE_GRID_TOLERANCE = 0.05


def _fraction_text(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


# --------------------------------------------------------------------------
# closed forms


def minimal_index(m: int) -> int:
    """Smallest admissible even index ``max(0, 2 (m - 3))`` of the closed form."""
    return max(0, 2 * (m - 3))


def eigenvalues_closed_form(m: int, N: int, k: int, *, sign: str = SIGN_POSITIVE,
                            variant: str = VARIANT_DERIVED, exact: bool = False):
    """Closed-form ``n = 1`` eigenvalue with even index ``k``.

    ``lambda_k = c0 prod_{j<m} (k + 2 - 2j) prod_{j<m} (k + N + 2 - 2j)``, which for
    ``m = 2`` is ``c0 k (k+2) (k+N) (k+N+2)``.

    Parameters
    ----------
    m, N : int
        Half-order of the equation and space dimension.
    k : int
        Even index, at least :func:`minimal_index`.
    sign : {"positive", "operator"}
        ``"positive"`` returns the magnitude (eigenvalue of ``-A'``); ``"operator"``
        returns the eigenvalue of ``A'`` itself, which carries a minus sign.
    variant : {"derived", "printed"}
        ``"printed"`` drops the last factor of the first product, reproducing a
        published form with ``m - 1`` factors there.
    exact : bool
        Return a :class:`fractions.Fraction` instead of a float.

    Raises
    ------
    ParameterError
        Odd or out-of-range ``k``, unknown ``sign`` or ``variant``.
    """
    if int(m) != m or m < 2 or int(N) != N or N < 1:
        raise ParameterError("need integers m >= 2 and N >= 1")
    if int(k) != k or k % 2:
        raise ParameterError(f"the radial spectrum is indexed by even k, got {k}")
    if k < minimal_index(m):
        raise ParameterError(f"k must be at least {minimal_index(m)} for m = {m}")
    if sign not in (SIGN_POSITIVE, SIGN_OPERATOR):
        raise ParameterError(f"unknown sign convention {sign!r}")
    if variant not in (VARIANT_DERIVED, VARIANT_PRINTED):
        raise ParameterError(f"unknown variant {variant!r}")
    first_count = m if variant == VARIANT_DERIVED else m - 1
    value = explicit_profile_constant(m, N)
    for j in range(first_count):
        value *= k + 2 - 2 * j
    for j in range(m):
        value *= k + N + 2 - 2 * j
    if sign == SIGN_OPERATOR:
        value = -value
    return value if exact else float(value)


def nonradial_eigenvalue(k: int, N: int) -> int:
    """Laplace-Beltrami eigenvalue ``k (k + N - 2)`` of degree-``k`` spherical harmonics."""
    if int(k) != k or k < 0:
        raise ParameterError("spherical harmonic degree must be a non-negative integer")
    return int(k) * (int(k) + int(N) - 2)


# --------------------------------------------------------------------------
# polynomial eigenfunctions


def _radial_laplacian(coeffs: list[Fraction], N: int) -> list[Fraction]:
    """Radial Laplacian of ``sum_j c_j r^{2j}``, in powers of ``r^2``."""
    out = [Fraction(0)] * max(len(coeffs) - 1, 1)
    for j in range(1, len(coeffs)):
        out[j - 1] = coeffs[j] * (2 * j) * (2 * j + N - 2)
    return out


def _times_gap(coeffs: list[Fraction]) -> list[Fraction]:
    """Multiply ``sum_j c_j r^{2j}`` by ``1 - r^2``."""
    out = list(coeffs) + [Fraction(0)]
    for j, c in enumerate(coeffs):
        out[j + 1] -= c
    return out


def _apply_positive_operator(coeffs: list[Fraction], N: int, c0: Fraction) -> list[Fraction]:
    """``c0 (1 - r^2) [Delta((1 - r^2) Delta psi) + 2N Delta psi]`` in powers of ``r^2``."""
    lap = _radial_laplacian(coeffs, N)
    inner = _radial_laplacian(_times_gap(lap), N)
    total = [a + 2 * N * b for a, b in zip(inner + [Fraction(0)] * len(lap), lap)]
    return [c0 * x for x in _times_gap(total)][: len(coeffs)]


def _rho_moment(coeffs: list[Fraction], N: int) -> Fraction:
    """``int_0^1 r^{N-1} (1 - r^2) q(r^2) dr`` for ``q = sum_j c_j r^{2j}``."""
    return sum((c * (Fraction(1, 2 * j + N) - Fraction(1, 2 * j + N + 2))
                for j, c in enumerate(coeffs)), Fraction(0))


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _eigenpolynomial(k: int, N: int, c0: Fraction) -> list[Fraction]:
    """Exact eigenpolynomial of degree ``k + 2`` in powers of ``r^2``, leading coefficient 1.

    Uses the ansatz ``(r^2 - 1) q(r^2)`` with ``q`` of degree ``k/2``. The operator
    is triangular on even monomials, so the eigen-equation is solved from the
    top degree downward; one equation is redundant and is checked.
    """
    lam = eigenvalues_closed_form(2, N, k, exact=True)
    size = k // 2 + 1
    # columns: images of (r^2 - 1) r^{2i} under (operator - lam)
    columns = []
    for i in range(size):
        basis = [Fraction(0)] * (size + 1)
        basis[i + 1] += 1
        basis[i] -= 1
        image = _apply_positive_operator(basis, N, c0)
        columns.append([image[j] - lam * basis[j] for j in range(size + 1)])
    q = [Fraction(0)] * size
    q[-1] = Fraction(1)
    for row in range(size - 1, -1, -1):
        # equation for the r^{2 row} coefficient involves q_i with i >= row - 1
        unknown = row - 1
        if unknown < 0:
            break
        acc = sum(columns[i][row] * q[i] for i in range(unknown + 1, size))
        pivot = columns[unknown][row]
        if pivot == 0:
            raise NumericalError(f"singular eigen-system at k = {k}: eigenvalue inconsistent")
        q[unknown] = -acc / pivot
    residual = [sum(columns[i][row] * q[i] for i in range(size)) for row in range(size + 1)]
    if any(r != 0 for r in residual):
        raise NumericalError(f"eigen-system at k = {k} is inconsistent: eigenvalue mismatch")
    return _poly_mul([Fraction(-1), Fraction(1)], q)


def _to_r_powers(coeffs_in_r2: list[Fraction]) -> np.ndarray:
    out = np.zeros(2 * len(coeffs_in_r2) - 1)
    out[0::2] = [float(c) for c in coeffs_in_r2]
    return out


@dataclass(frozen=True)
class Spectrum:
    """Radial ``n = 1`` spectrum with polynomial eigenfunctions.

    Attributes
    ----------
    indices : tuple of int
        Even indices ``k = 0, 2, ..., K``.
    eigenvalues : ndarray
        Eigenvalues of ``-A'`` (non-negative).
    eigenfunctions : tuple of ndarray
        Coefficients of ``psi_k`` in ascending powers of ``r`` (degree ``k + 2``),
        normalized to unit norm in ``L^2_rho(B_1)`` and positive at ``r = 0``.
    b0 : float
        ``psi_0 = b0 (r^2 - 1)``.
    omega_N : float
        Volume of the unit ball.
    """

    params: ProblemParams
    indices: tuple
    eigenvalues: np.ndarray
    eigenfunctions: tuple
    b0: float
    omega_N: float
    exact_eigenvalues: tuple = ()
    weight: str = "rho(r) = 1/(1 - r^2)"

    def evaluate(self, index: int, r) -> np.ndarray:
        """``psi_k(r)`` for the ``index``-th stored eigenfunction."""
        return np.polynomial.polynomial.polyval(np.asarray(r, dtype=float), self.eigenfunctions[index])

    def inner_product(self, first, second, rtol: float = 1e-12) -> float:
        """``L^2_rho(B_1)`` inner product of two radial callables."""
        return rho_inner_product(first, second, self.params.N, rtol)

    def gram_matrix(self, rtol: float = 1e-12) -> np.ndarray:
        """Gram matrix of the stored eigenfunctions by numerical quadrature."""
        size = len(self.eigenfunctions)
        out = np.empty((size, size))
        for i in range(size):
            for j in range(i, size):
                value = self.inner_product(lambda r, i=i: self.evaluate(i, r),
                                           lambda r, j=j: self.evaluate(j, r), rtol)
                out[i, j] = out[j, i] = value
        return out

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "indices": list(self.indices),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "exact_eigenvalues": [_fraction_text(x) for x in self.exact_eigenvalues],
            "eigenfunctions": [[float(c) for c in psi] for psi in self.eigenfunctions],
            "b0": self.b0,
            "omega_N": self.omega_N,
            "weight": self.weight,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=1)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def rho_inner_product(first, second, N: int, rtol: float = 1e-12) -> float:
    """``int_{B_1} f g / (1 - |x|^2) dx`` for radial ``f, g`` vanishing at ``r = 1``.

    Gauss-Legendre on ``[0, 1]`` after factoring ``1 - r^2 = (1 - r)(1 + r)``; the
    integrand is smooth when both functions vanish at the boundary. Two rules
    are compared as an error estimate.
    """
    def integrand(r):
        r = np.asarray(r, dtype=float)
        gap = 1.0 - r * r
        return np.asarray(first(r)) * np.asarray(second(r)) / gap * r ** (N - 1)

    return N * unit_ball_volume(N) * quad_weighted(integrand, (0.0, 1.0), 1.0, rtol)


def polynomial_eigenfunctions(N: int = 1, K: int = 8) -> Spectrum:
    """Exact polynomial eigenfunctions ``psi_0, psi_2, ..., psi_K`` for ``n = 1, m = 2``.

    Each ``psi_k`` solves the eigen-equation in exact rational arithmetic on the
    ansatz ``(r^2 - 1) q(r^2)`` and is then normalized in ``L^2_rho``.

    Raises
    ------
    ParameterError
        ``K`` odd or negative.
    NumericalError
        The linear system is singular or inconsistent.
    """
    if int(K) != K or K < 0 or K % 2:
        raise ParameterError("K must be a non-negative even integer")
    params = ProblemParams(n=1.0, N=N, m=2)
    c0 = explicit_profile_constant(2, N)
    omega = unit_ball_volume(N)
    surface = N * omega
    indices, values, exact, functions = [], [], [], []
    for k in range(0, int(K) + 1, 2):
        coeffs = _eigenpolynomial(k, N, c0)
        # psi^2 rho = (1 - r^2) q^2 with q = psi / (1 - r^2)
        quotient = _divide_gap(coeffs)
        norm_sq = surface * float(_rho_moment(_poly_mul(quotient, quotient), N))
        scale = 1.0 / math.sqrt(norm_sq)
        if coeffs[0] < 0:
            scale = -scale
        indices.append(k)
        exact.append(eigenvalues_closed_form(2, N, k, exact=True))
        values.append(float(exact[-1]))
        functions.append(_to_r_powers(coeffs) * scale)
    b0 = -math.sqrt((N + 2) / (2.0 * omega))
    return Spectrum(params, tuple(indices), np.array(values), tuple(functions), b0, omega,
                    tuple(exact))


def _divide_gap(coeffs: list[Fraction]) -> list[Fraction]:
    """Exact quotient of ``sum_j c_j r^{2j}`` by ``1 - r^2`` (remainder must vanish)."""
    rem = list(coeffs)
    out = [Fraction(0)] * (len(rem) - 1)
    for j in range(len(rem) - 1, 0, -1):
        out[j - 1] = -rem[j]
        rem[j] = Fraction(0)
        rem[j - 1] -= out[j - 1]
    if rem[0] != 0:
        raise NumericalError("polynomial does not vanish at r = 1")
    return out


def apply_operator_to_polynomial(coeffs_in_r, N: int) -> np.ndarray:
    """``-A'`` for ``n = 1, m = 2`` applied to an even polynomial given in powers of ``r``."""
    c = np.asarray(coeffs_in_r, dtype=float)
    if np.any(c[1::2] != 0):
        raise ParameterError("polynomial must be even in r")
    r2 = [Fraction(x) for x in c[0::2]]
    image = _apply_positive_operator(r2, N, explicit_profile_constant(2, N))
    return _to_r_powers(image)


# --------------------------------------------------------------------------
# discretization


def _cell_volumes(nodes: np.ndarray, h: float, N: int) -> np.ndarray:
    """``int r^{N-1} dr`` over the dual cells ``[r_i - h/2, r_i + h/2] cap [0, 1]``."""
    lo = np.maximum(nodes - 0.5 * h, 0.0)
    hi = np.minimum(nodes + 0.5 * h, 1.0)
    return (hi ** N - lo ** N) / N


def _laplacian_matrix(M: int, h: float, N: int) -> np.ndarray:
    """Second-order radial Laplacian at nodes ``0..M-1`` of unknowns ``psi_0..psi_{M-1}``
    with ``psi_M = 0`` and the even closure ``Delta psi_0 = 2N (psi_1 - psi_0)/h^2``."""
    L = np.zeros((M, M))
    L[0, 0] = -2.0 * N / h ** 2
    if M > 1:
        L[0, 1] = 2.0 * N / h ** 2
    for i in range(1, M):
        r = i * h
        drift = (N - 1) / (2.0 * h * r)
        L[i, i - 1] = 1.0 / h ** 2 - drift
        L[i, i] = -2.0 / h ** 2
        if i + 1 < M:
            L[i, i + 1] = 1.0 / h ** 2 + drift
    return L


def _difference_matrix(M: int, h: float) -> np.ndarray:
    """Forward differences ``(psi_{i+1} - psi_i)/h`` on half points, ``psi_M = 0``."""
    D = np.zeros((M, M))
    for i in range(M):
        D[i, i] = -1.0 / h
        if i + 1 < M:
            D[i, i + 1] = 1.0 / h
    return D


@dataclass(frozen=True)
class DiscreteOperator:
    """Finite-difference ``B = -A'(F)`` on the unit support.

    Attributes
    ----------
    grid : ndarray
        Radii of the unknowns ``r_i = i h``, ``i < M``; ``psi(1) = 0`` is eliminated.
    matrix : ndarray
        Standard-form matrix. For ``n = 1`` it is the symmetric reduction
        ``W^{-1/2} K W^{-1/2}`` of the generalized problem ``K psi = lambda W psi``
        with diagonal ``W = rho`` times cell volumes. For ``n != 1`` it is the
        non-symmetric flux-form discretization.
    weights : ndarray
        ``W`` for ``n = 1``; plain cell volumes for ``n != 1``.
    """

    params: ProblemParams
    grid: np.ndarray
    matrix: np.ndarray
    weights: np.ndarray
    symmetric: bool
    stiffness: np.ndarray | None = None
    profile_support: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "matrix", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.grid.size

    def symmetry_defect(self) -> float:
        """``max|A - A^T| / max|A|``."""
        a = self.matrix
        return float(np.max(np.abs(a - a.T)) / np.max(np.abs(a)))

    def banded(self) -> np.ndarray:
        """Upper band storage of the (pentadiagonal) symmetric matrix."""
        if not self.symmetric:
            raise ParameterError("band storage is provided for the symmetric n = 1 matrix")
        return to_upper_band(self.matrix, 2)

    def eigenvalues(self, count: int | None = None) -> np.ndarray:
        """Eigenvalues sorted by real part; real for ``n = 1``."""
        if self.symmetric:
            w = np.array([lam for lam, _ in eig_banded_symmetric(self.matrix, check_residual=False)])
        else:
            w = scipy.linalg.eigvals(self.matrix)
            w = w[np.argsort(w.real)]
            if np.max(np.abs(w.imag)) <= 1e-9 * np.max(np.abs(w)):
                w = w.real
        return w if count is None else w[:count]

    def apply(self, values) -> np.ndarray:
        """``B psi`` for nodal values ``psi`` on :attr:`grid`."""
        v = np.asarray(values, dtype=float)
        if self.symmetric:
            return (self.stiffness @ v) / self.weights
        return self.matrix @ v


def _symmetric_operator(N: int, M: int) -> DiscreteOperator:
    params = ProblemParams(n=1.0, N=N, m=2)
    c0 = float(explicit_profile_constant(2, N))
    h = 1.0 / M
    nodes = np.arange(M) * h
    vol = _cell_volumes(nodes, h, N)
    gap = 1.0 - nodes ** 2
    halves = (np.arange(M) + 0.5) * h
    half_vol = (np.minimum(halves + 0.5 * h, 1.0) ** N - (halves - 0.5 * h) ** N) / N
    L = _laplacian_matrix(M, h, N)
    D = _difference_matrix(M, h)
    # quadratic form c0 int a (Delta psi)^2 - 2N c0 int |psi'|^2
    K = c0 * (L.T @ ((gap * vol)[:, None] * L)) - 2.0 * N * c0 * (D.T @ (half_vol[:, None] * D))
    K = 0.5 * (K + K.T)
    W = vol / gap
    s = 1.0 / np.sqrt(W)
    S = s[:, None] * K * s[None, :]
    S = 0.5 * (S + S.T)
    return DiscreteOperator(params, nodes, S, W, True, K, 1.0,
                            {"profile": "explicit", "c0": c0})


def _one_sided_laplacian_row(M: int, h: float, N: int) -> np.ndarray:
    """Second-order one-sided Laplacian at ``r = 1`` using ``psi_M = 0``."""
    row = np.zeros(M)
    # psi'' ~ (2 psi_M - 5 psi_{M-1} + 4 psi_{M-2} - psi_{M-3}) / h^2
    # psi'  ~ (3 psi_M - 4 psi_{M-1} + psi_{M-2}) / (2h)
    row[M - 1] += -5.0 / h ** 2 - (N - 1) * 4.0 / (2.0 * h)
    row[M - 2] += 4.0 / h ** 2 + (N - 1) * 1.0 / (2.0 * h)
    row[M - 3] += -1.0 / h ** 2
    return row


def _general_operator(params: ProblemParams, M: int, profile: Profile) -> DiscreteOperator:
    n, N, beta = params.n, params.N, params.beta
    unit = profile.rescaled(1.0 / profile.interface) if profile.interface != 1.0 else profile
    h = 1.0 / M
    nodes = np.arange(M) * h
    halves = (np.arange(M) + 0.5) * h
    vol = _cell_volumes(nodes, h, N)
    area = halves ** (N - 1)
    mobility = np.abs(unit.evaluate(halves)) ** n
    L = np.vstack([_laplacian_matrix(M, h, N), _one_sided_laplacian_row(M, h, N)])
    # flux J_{i+1/2} = area * F^n * (Delta psi_{i+1} - Delta psi_i)/h, i = 0..M-1
    grad_lap = (L[1:] - L[:-1]) / h
    flux = (area * mobility)[:, None] * grad_lap
    # advective flux (1 - n) beta r^N psi at half points, psi averaged
    avg = np.zeros((M, M))
    for i in range(M):
        avg[i, i] = 0.5
        if i + 1 < M:
            avg[i, i + 1] = 0.5
    adv = ((1.0 - n) * beta * halves ** N)[:, None] * avg
    total = -flux + adv
    div = total.copy()
    div[1:] -= total[:-1]
    # B = -A' = div(F^n grad Delta psi) - (1 - n) beta div(r psi) with A' in divergence form
    B = -div / vol[:, None]
    return DiscreteOperator(params, nodes, B, vol, False, None, float(profile.interface),
                            {"profile": profile.problem_kind})


def discretize_operator(params: ProblemParams, grid_size: int, *,
                        profile: Profile | None = None, check: bool = True) -> DiscreteOperator:
    """Finite-difference discretization of ``-A'(F)`` on ``0 <= r <= 1``.

    ``n = 1``: the eigenproblem ``-c0 [Delta(a Delta psi) + 2N Delta psi] = rho lambda psi``
    with ``a = 1 - r^2`` is discretized from its quadratic form, which keeps the
    matrix symmetric at the stencil level. ``n != 1``: the divergence form
    ``A' Y = -div(F^n grad Delta Y) + (1 - n) beta div(Y x)`` is discretized
    directly on the profile rescaled to unit support (the spectrum does not
    depend on the member of the scaling family).

    Parameters
    ----------
    grid_size : int
        Number of intervals ``M`` on ``[0, 1]``.
    profile : Profile, optional
        Similarity profile for ``n != 1``; shot with :func:`shoot_fbp_profile`
        when omitted.
    check : bool
        Refuse grids whose leading nonzero eigenvalue misses the closed form
        (``n = 1``) by more than 5 %, or whose smallest eigenvalue is not
        separated from zero (``n != 1``).

    Raises
    ------
    ParameterError
        ``m != 2``, grid too small, or grid too coarse.
    """
    if params.m != 2:
        raise ParameterError("the discretization is implemented for m = 2")
    if int(grid_size) != grid_size or grid_size < 8:
        raise ParameterError("grid_size must be an integer >= 8")
    M = int(grid_size)
    if params.n == 1.0:
        op = _symmetric_operator(params.N, M)
        if check:
            lam = op.eigenvalues(2)[1]
            target = eigenvalues_closed_form(2, params.N, 2)
            if abs(lam - target) > COARSE_GRID_TOLERANCE * target:
                raise ParameterError(f"grid {M} too coarse: leading eigenvalue {lam:.6g} vs {target:.6g}")
        return op
    if profile is None:
        profile = shoot_fbp_profile(params)
    if profile.problem_kind != FBP:
        raise ParameterError("the operator is linearized around a free-boundary profile")
    op = _general_operator(params, M, profile)
    if check:
        w = np.abs(op.eigenvalues(2))
        if w[0] > COARSE_GRID_TOLERANCE * w[1]:
            raise ParameterError(f"grid {M} too coarse: smallest eigenvalue {w[0]:.3g} is not near zero")
    return op


# --------------------------------------------------------------------------
# zero mode


def zero_eigenfunction_general_n(profile: Profile, *, negativity_tol: float = 1e-10) -> np.ndarray:
    """Scaling-group zero mode ``psi_0 = (4/n) F - r F'`` on the profile grid.

    This is the derivative of ``F_l = l^{4/n} F(r / l)`` at ``l = 1``; it vanishes at
    the interface.

    Raises
    ------
    ParameterError
        Not a free-boundary profile, or ``n`` outside ``(0, 3)``.
    NumericalError
        Negative interior values beyond ``negativity_tol * max psi_0``.
    """
    n = profile.params.n
    if profile.problem_kind != FBP:
        raise ParameterError("the zero mode is defined for free-boundary profiles")
    if not 0.0 < n < 3.0:
        raise ParameterError("the zero mode needs 0 < n < 3")
    psi = 4.0 / n * profile.values - profile.grid * profile.derivatives[:, 0]
    interior = psi[:-1]
    if np.min(interior) < -negativity_tol * np.max(psi):
        raise NumericalError("zero mode is negative in the interior: profile inaccurate near the interface")
    return psi


def sample_zero_mode(profile: Profile, radii) -> np.ndarray:
    """``(4/n) F - r F'`` at arbitrary radii by cubic Hermite interpolation of ``F`` and ``F'``."""
    n = profile.params.n
    r = np.asarray(radii, dtype=float)
    inside = np.minimum(np.abs(r), profile.grid[-1])
    F = CubicHermiteSpline(profile.grid, profile.values, profile.derivatives[:, 0])(inside)
    dF = CubicHermiteSpline(profile.grid, profile.derivatives[:, 0], profile.derivatives[:, 1])(inside)
    return np.where(np.abs(r) <= profile.grid[-1], 4.0 / n * F - inside * dF, 0.0)


def zero_mode_residual(op: DiscreteOperator, profile: Profile) -> float:
    """``||B psi_0|| / ||psi_0||`` (cell-volume weighted) for the sampled zero mode.

    The zero mode of the unit-support member is sampled on the operator grid.
    Compare with the first nonzero eigenvalue (equal to 1) to judge smallness.
    """
    unit = profile.rescaled(1.0 / profile.interface) if profile.interface != 1.0 else profile
    zero_eigenfunction_general_n(unit)
    sampled = sample_zero_mode(unit, op.grid)
    image = op.apply(sampled)
    vol = _cell_volumes(op.grid, op.grid[1] - op.grid[0], profile.params.N)
    return float(np.sqrt(np.sum(vol * image ** 2) / np.sum(vol * sampled ** 2)))


# --------------------------------------------------------------------------
# symmetry certificate


def _as_rational(n) -> Fraction:
    if isinstance(n, Fraction):
        return n
    if isinstance(n, int):
        return Fraction(n)
    if isinstance(n, str):
        try:
            return Fraction(n)
        except ValueError as exc:
            raise ParameterError(f"cannot read {n!r} as a rational") from exc
    raise ParameterError("the certificate needs an exact rational n (Fraction, int or 'p/q')")


def _taylor_coefficients(n: Fraction, order: int, equation: str) -> list[Poly]:
    """Taylor coefficients of ``f`` with ``f(0)=1, f'(0)=f'''(0)=0, f''(0)=b`` from one equation.

    ``equation="tfode"``: ``f^n f''' = y f / (n+4)``.
    ``equation="consistency"``: ``f^{n/2} (f^{n/2})''' + n f^{n-1} f''' = y / (n+4)``.
    The ``y^j`` coefficient of either equation is linear in ``c_{j+3}`` with
    factor ``L (j+3)(j+2)(j+1)``, ``L = 1`` or ``3n/2``.
    """
    b = Poly.symbol()
    coeffs = [Poly([1]), Poly(), b / 2, Poly()]
    y = RationalSeries.variable(order)
    lead = Fraction(1) if equation == "tfode" else Fraction(3) * n / 2
    while len(coeffs) < order + 1:
        j = len(coeffs) - 3
        f = RationalSeries(coeffs + [Poly()] * (order + 1 - len(coeffs)), order)
        if equation == "tfode":
            value = series_mul(series_pow(f, n), series_diff(f, 3))[j] - series_mul(y, f)[j] / (n + 4)
        else:
            g = series_pow(f, n / 2)
            value = (series_mul(g, series_diff(g, 3))[j]
                     + n * series_mul(series_pow(f, n - 1), series_diff(f, 3))[j]
                     - y[j] / (n + 4))
        coeffs.append(-value / (lead * (j + 3) * (j + 2) * (j + 1)))
    return coeffs


def _square_roots_of(poly: Poly) -> tuple[bool, list[Fraction]]:
    """Candidate values of ``b^2`` where ``poly(b)`` vanishes.

    Returns ``(has_zero_root, nonzero_b_squared_values)``. Only polynomials that
    are at most quadratic in ``b^2`` after removing powers of ``b`` are needed.
    """
    power, rest = poly.strip_symbol_factor()
    if not rest.coeffs:
        return True, []
    if any(c != 0 for c in rest.coeffs[1::2]):
        raise NumericalError("coefficient difference is not even in b after factoring")
    sq = Poly(rest.coeffs[0::2])
    if sq.degree == 0:
        return power > 0, []
    if sq.degree == 1:
        return power > 0, [-sq.coeffs[0] / sq.coeffs[1]]
    raise NumericalError("coefficient difference of unexpected degree in b^2")


def _vanishes_at(poly: Poly, b_squared: Fraction) -> bool:
    """Whether ``poly(b) = 0`` for both ``b = +-sqrt(b_squared)``."""
    even = Poly(poly.coeffs[0::2])
    odd = Poly(poly.coeffs[1::2])
    return even(b_squared) == 0 and odd(b_squared) == 0


@dataclass(frozen=True)
class SymmetryVerdict:
    """Outcome of the exact symmetry test at exponent ``n``.

    Candidate sets hold the exact values of ``b^2`` (``b = f''(0)``) at which the
    Taylor coefficient of ``y^4`` (resp. ``y^6``) from the two equations agree.
    ``b = 0`` is listed as the value ``0`` when it is a root.
    """

    n: Fraction
    matched_through: int
    b_squared_y4: tuple
    b_squared_y6: tuple
    verdict: str
    printed_b_squared_y4: Fraction | None
    printed_b_squared_y6: Fraction | None
    order: int

    @property
    def common(self) -> tuple:
        return tuple(sorted(set(self.b_squared_y4) & set(self.b_squared_y6)))

    def real_candidates(self, which: str = "y4") -> list[float]:
        """Real ``b`` values (both signs) of a candidate set."""
        values = self.b_squared_y4 if which == "y4" else self.b_squared_y6
        out = []
        for s in values:
            if s > 0:
                out += [-math.sqrt(s), math.sqrt(s)]
            elif s == 0:
                out.append(0.0)
        return sorted(out)

    def as_dict(self) -> dict:
        def text(x):
            return None if x is None else _fraction_text(x)

        return {
            "n": text(self.n),
            "matched_through": self.matched_through,
            "b_squared_y4": [text(x) for x in self.b_squared_y4],
            "b_squared_y6": [text(x) for x in self.b_squared_y6],
            "verdict": self.verdict,
            "printed_b_squared_y4": text(self.printed_b_squared_y4),
            "printed_b_squared_y6": text(self.printed_b_squared_y6),
            "order": self.order,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.as_dict(), indent=1)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def printed_b_squared_y4(n) -> Fraction | None:
    """``b^2`` from the published y^4 condition
    ``b = +- sqrt(-6n(n^2+2n-8)(3n-2)) / (3n^3 + 6n^2 - 24n)``; None where undefined."""
    n = _as_rational(n)
    den = 3 * n ** 3 + 6 * n ** 2 - 24 * n
    if den == 0:
        return None
    return -6 * n * (n ** 2 + 2 * n - 8) * (3 * n - 2) / den ** 2


def printed_b_squared_y6(n) -> Fraction | None:
    """``b^2`` from the published y^6 formula
    ``b = +- 2 sqrt2 sqrt(n(9n^3-40n^2-188n+464)(3n-2)) / (9n^4-40n^3-188n^2+464n)``."""
    n = _as_rational(n)
    den = 9 * n ** 4 - 40 * n ** 3 - 188 * n ** 2 + 464 * n
    if den == 0:
        return None
    return 8 * n * (9 * n ** 3 - 40 * n ** 2 - 188 * n + 464) * (3 * n - 2) / den ** 2


def printed_b_y4(n) -> tuple[float, float]:
    """Real values ``(-|b|, +|b|)`` of the published y^4 condition.

    Raises
    ------
    ParameterError
        The formula is undefined or has no real value at ``n``.
    """
    s = printed_b_squared_y4(n)
    if s is None or s < 0:
        raise ParameterError(f"published y^4 condition has no real value at n = {n}")
    root = math.sqrt(s)
    return -root, root


def symmetry_certificate(n, order: int = 10) -> SymmetryVerdict:
    """Exact test of whether the profile equation admits the symmetry condition.

    Both the profile ODE and the consistency condition required by symmetry in
    ``L^2_rho`` are expanded around ``y = 0`` with ``f(0) = 1``, ``f'(0) = f'''(0) = 0``
    and symbolic ``f''(0) = b``. The ``b^2`` values at which the ``y^4`` and the
    ``y^6`` coefficients agree are compared.

    Verdicts: ``"symmetric"`` when a common real nonzero ``b`` makes all
    coefficients through ``order`` agree; ``"degenerate"`` when the two sets
    share only ``b = 0``; ``"not-symmetric"`` when they are disjoint.

    Raises
    ------
    ParameterError
        ``n`` is not an exact rational, or ``n <= 0``.
    """
    n = _as_rational(n)
    if n <= 0:
        raise ParameterError("the certificate needs n > 0")
    if int(order) != order or not 6 <= order <= 14:
        raise ParameterError("order must be an integer in [6, 14]")
    order = int(order)
    tfode = _taylor_coefficients(n, order, "tfode")
    consistency = _taylor_coefficients(n, order, "consistency")
    diffs = [a - c for a, c in zip(tfode, consistency)]
    zero4, set4 = _square_roots_of(diffs[4])
    zero6, set6 = _square_roots_of(diffs[6])
    cand4 = tuple(sorted(set(set4) | ({Fraction(0)} if zero4 else set())))
    cand6 = tuple(sorted(set(set6) | ({Fraction(0)} if zero6 else set())))
    common = set(cand4) & set(cand6)
    matched = 3
    for s in sorted(x for x in set(cand4) if x >= 0):
        reach = 3
        for j in range(4, order + 1):
            if not _vanishes_at(diffs[j], s):
                break
            reach = j
        matched = max(matched, reach)
    nonzero_common = [s for s in common if s > 0 and all(_vanishes_at(d, s) for d in diffs)]
    if nonzero_common:
        verdict = VERDICT_SYMMETRIC
    elif common:
        verdict = VERDICT_DEGENERATE
    else:
        verdict = VERDICT_NOT_SYMMETRIC
    return SymmetryVerdict(n, matched, cand4, cand6, verdict,
                           printed_b_squared_y4(n), printed_b_squared_y6(n), order)
