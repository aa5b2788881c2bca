"""Bracketed scalar root finding."""

from __future__ import annotations

from typing import Callable

from scipy.optimize import brentq

from ..errors import MaxIterationsExceeded, NoSignChange


def solve_bracketed(g: Callable[[float], float], bracket: tuple[float, float],
                    tol: float = 1e-12, maxiter: int = 200) -> float:
    """Root of ``g`` inside a sign-changing bracket.

    Brent's method: inverse quadratic/secant steps safeguarded by bisection,
    so convergence is guaranteed for continuous ``g``.

    Parameters
    ----------
    g : callable
        Scalar function.
    bracket : (a, b)
        Interval with ``g(a) * g(b) <= 0``.
    tol : float
        Absolute width of the final bracket.

    Raises
    ------
    NoSignChange
        When ``g`` has the same strict sign at both ends.
    MaxIterationsExceeded
        When ``maxiter`` iterations do not shrink the bracket below ``tol``.
    """
    a, b = float(bracket[0]), float(bracket[1])
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if ga * gb > 0.0:
        raise NoSignChange(f"g({a})={ga:.3e} and g({b})={gb:.3e} share a sign")
    try:
        root, info = brentq(g, a, b, xtol=tol, rtol=8.9e-16, maxiter=maxiter,
                            full_output=True, disp=False)
    except RuntimeError as exc:  # pragma: no cover - brentq raises only with disp=True
        raise MaxIterationsExceeded(str(exc)) from exc
    if not info.converged:
        raise MaxIterationsExceeded(f"no convergence after {info.iterations} iterations")
    return float(root)


def scan_sign_changes(g: Callable[[float], float], grid) -> list[tuple[float, float]]:
    """Adjacent grid pairs on which ``g`` changes sign."""
    values = [g(x) for x in grid]
    out = []
    for (x0, g0), (x1, g1) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if g0 == 0.0 or g0 * g1 < 0.0:
            out.append((x0, x1))
    return out
