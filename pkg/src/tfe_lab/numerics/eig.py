"""Symmetric banded eigenproblems."""

from __future__ import annotations

import numpy as np
from scipy.linalg import eig_banded

from ..errors import AsymmetricMatrix, NumericalError


def bandwidth(matrix: np.ndarray) -> int:
    """Number of nonzero superdiagonals."""
    a = np.asarray(matrix)
    nz = np.nonzero(a)
    if nz[0].size == 0:
        return 0
    return int(np.max(np.abs(nz[1] - nz[0])))


def to_upper_band(matrix: np.ndarray, ku: int) -> np.ndarray:
    """LAPACK upper band storage: row ``ku - d`` holds superdiagonal ``d``."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    band = np.zeros((ku + 1, n))
    for d in range(ku + 1):
        band[ku - d, d:] = np.diagonal(a, d)
    return band


def eig_banded_symmetric(matrix: np.ndarray, sym_tol: float = 1e-12,
                         check_residual: bool = True) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of a symmetric banded matrix, ascending.

    Raises
    ------
    AsymmetricMatrix
        If ``max|A - A^T| > sym_tol * max|A|``.
    NumericalError
        If a residual exceeds ``1e-8 * ||A||``.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise AsymmetricMatrix("matrix must be square")
    scale = float(np.max(np.abs(a))) or 1.0
    defect = float(np.max(np.abs(a - a.T)))
    if defect > sym_tol * scale:
        raise AsymmetricMatrix(f"symmetry defect {defect / scale:.3e} (relative)")
    ku = bandwidth(a)
    w, v = eig_banded(to_upper_band(0.5 * (a + a.T), ku), lower=False)
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    if check_residual:
        norm = float(np.linalg.norm(a, 2)) if a.shape[0] <= 400 else float(np.linalg.norm(a, 1))
        res = np.linalg.norm(a @ v - v * w[None, :], axis=0)
        if np.any(res > 1e-8 * max(norm, 1e-300)):
            raise NumericalError("eigenpair residual exceeds 1e-8 ||A||")
    return [(float(w[i]), v[:, i].copy()) for i in range(w.size)]
