"""Gauss-Legendre quadrature graded toward a singular endpoint."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from ..errors import ParameterError, QuadratureDivergence


@lru_cache(maxsize=16)
def _gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(npts)
    return x, w


def _graded_panels(a: float, b: float, depth: int) -> np.ndarray:
    # breakpoints a, b - L/2, b - L/4, ..., b - L/2**depth (the last tiny panel is
    # handled by the power-law tail formula)
    length = b - a
    offsets = length * 0.5 ** np.arange(depth + 1)
    return np.concatenate(([a], b - offsets[1:]))


def _composite(h: Callable, edges: np.ndarray, npts: int) -> float:
    x, w = _gauss_legendre(npts)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (hi + lo) + half * x[None, :]
    vals = np.asarray(h(nodes.ravel()), dtype=float).reshape(nodes.shape)
    return float(np.sum(vals * w[None, :] * half))


def _graded(h: Callable, a: float, b: float, depth: int, npts: int, exponent: float) -> float:
    edges = _graded_panels(a, b, depth)
    body = _composite(h, edges, npts)
    delta = b - edges[-1]
    tail = float(h(np.array([edges[-1]]))[0]) * delta / (1.0 + exponent)
    return body + tail


def quad_weighted(h: Callable[[np.ndarray], np.ndarray], interval: tuple[float, float],
                  endpoint_exponent: float = 0.0, rtol: float = 1e-10,
                  npts: int = 20) -> float:
    """Integrate ``h`` over ``interval`` allowing an algebraic endpoint singularity.

    ``h`` behaves like ``(b - r)**endpoint_exponent`` at the right endpoint ``b``.
    For a non-integer or negative exponent the panels halve in length toward
    ``b`` and the final sliver uses the power-law tail. Two rules (finer grading
    and more nodes) are compared as an internal error estimate.

    Parameters
    ----------
    h : callable
        Vectorized integrand, including any weight.
    interval : (a, b)
        Integration limits with ``a < b``.
    endpoint_exponent : float
        Strength of the singularity at ``b``; must exceed -1.

    Raises
    ------
    QuadratureDivergence
        If the two refinement levels disagree beyond ``rtol`` (typically a
        non-integrable singularity).
    """
    a, b = map(float, interval)
    if not b > a:
        raise ParameterError("interval must satisfy a < b")
    e = float(endpoint_exponent)
    if e <= -1.0:
        raise ParameterError("endpoint_exponent must exceed -1 for integrability")
    if e >= 0.0 and e.is_integer():
        coarse = _composite(h, np.linspace(a, b, 3), npts)
        fine = _composite(h, np.linspace(a, b, 5), npts + 8)
    else:
        # resolve the singular panel until roundoff in r limits the grading
        depth = max(12, min(int(math.ceil(45.0 / (1.0 + e))), 36))
        coarse = _graded(h, a, b, depth - 4, npts, e)
        fine = _graded(h, a, b, depth, npts + 8, e)
    scale = max(abs(fine), 1e-300)
    if abs(fine - coarse) > max(rtol * scale, 1e-14 * _abs_scale(h, a, b)):
        raise QuadratureDivergence(
            f"refinement levels differ: {coarse!r} vs {fine!r}")
    return fine


def _abs_scale(h, a, b) -> float:
    x = np.linspace(a, b, 65)[1:-1]
    return float(np.max(np.abs(h(x)))) * (b - a)


def ball_integral(radial: Callable[[np.ndarray], np.ndarray], dim: int,
                  endpoint_exponent: float = 0.0, rtol: float = 1e-10) -> float:
    """Integral of a radial function over the unit ball in ``dim`` dimensions."""
    surface = dim * unit_ball_volume(dim)
    return surface * quad_weighted(lambda r: radial(r) * r ** (dim - 1), (0.0, 1.0),
                                   endpoint_exponent, rtol)


def unit_ball_volume(dim: int) -> float:
    """Volume of the unit ball, ``pi**(N/2) / Gamma(N/2 + 1)``."""
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)
