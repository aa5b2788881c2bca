"""Numerical building blocks: integration, roots, quadrature, eigenproblems, series."""

from .eig import eig_banded_symmetric
from .ivp import Trajectory, integrate_ivp
from .quadrature import ball_integral, quad_weighted, unit_ball_volume
from .roots import scan_sign_changes, solve_bracketed
from .series import MAX_ORDER, Poly, RationalSeries, series_diff, series_mul, series_pow

__all__ = [
    "MAX_ORDER", "Poly", "RationalSeries", "Trajectory", "ball_integral",
    "eig_banded_symmetric", "integrate_ivp", "quad_weighted", "scan_sign_changes",
    "series_diff", "series_mul", "series_pow", "solve_bracketed", "unit_ball_volume",
]
