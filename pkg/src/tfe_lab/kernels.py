"""Select the compiled third-order kernel or its pure-Python twin.

The compiled extension is used when it imports; setting the environment
variable ``TFE_LAB_PURE=1`` forces the Python implementation.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _pykernel

STATUS_DONE = _pykernel.STATUS_DONE
STATUS_ZERO = _pykernel.STATUS_ZERO
STATUS_ESCAPE = _pykernel.STATUS_ESCAPE
STATUS_UNDERFLOW = _pykernel.STATUS_UNDERFLOW
STATUS_MAXSTEPS = _pykernel.STATUS_MAXSTEPS
STATUS_GRAZING = _pykernel.STATUS_GRAZING

STATUS_NAMES = {
    STATUS_DONE: "done",
    STATUS_ZERO: "zero",
    STATUS_ESCAPE: "escape",
    STATUS_UNDERFLOW: "underflow",
    STATUS_MAXSTEPS: "max-steps",
    STATUS_GRAZING: "grazing-zero",
}


def _load_backend():
    if os.environ.get("TFE_LAB_PURE", "") not in ("", "0"):
        return _pykernel, "python"
    try:
        from . import _ckernel
    except ImportError:
        return _pykernel, "python"
    return _ckernel, "cython"


_backend, BACKEND = _load_backend()


@dataclass(frozen=True)
class ThirdOrderProblem:
    """``x''' + a2 x'' + a1 x' + a0 x + (g0 + g1 t + g2 e^t) x |x|^{-n} = 0``."""

    a2: float
    a1: float
    a0: float
    n: float
    g0: float = 1.0
    g1: float = 0.0
    g2: float = 0.0

    def rhs(self, t: float, x: float, xp: float, xpp: float) -> float:
        g = self.g0 + self.g1 * t + (self.g2 * math.exp(t) if self.g2 else 0.0)
        if self.n == 0.0:
            nl = x
        elif x == 0.0:
            nl = 0.0
        else:
            nl = math.copysign(abs(x) ** (1.0 - self.n), x)
        return -self.a2 * xpp - self.a1 * xp - self.a0 * x - g * nl


@dataclass
class KernelResult:
    """Outcome of one kernel run.

    Attributes
    ----------
    status : int
        One of the ``STATUS_*`` codes.
    t : float
        Final time.
    state : ndarray
        Final ``(x, x', x'')``.
    quad : ndarray
        Integrals of ``x'**2`` and ``x''**2`` over the run.
    zeros : ndarray
        Rows ``(t, x', x'')`` at each zero of ``x``.
    samples : ndarray
        Rows ``(x, x', x'')`` at the requested sample times reached.
    nsteps : int
        Accepted plus rejected steps.
    """

    status: int
    t: float
    state: np.ndarray
    quad: np.ndarray
    zeros: np.ndarray
    samples: np.ndarray
    nsteps: int
    backend: str = field(default=BACKEND)

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]


def integrate(problem: ThirdOrderProblem, t0: float, state0, t_end: float, *,
              rtol: float = 1e-11, atol: float = 1e-14, h_win: float = 1e-6,
              t_eval=(), max_zeros: int = -1, zero_dir: int = 0,
              escape: float = math.inf, h_init: float = 0.0,
              max_steps: int = 5_000_000, backend=None) -> KernelResult:
    """Run the third-order kernel from ``t0`` to ``t_end``.

    See :mod:`tfe_lab._pykernel` for the algorithm. ``backend`` may be
    ``"python"`` or ``"cython"`` to override the import-time choice.
    """
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    mod, name = _backend, BACKEND
    if backend == "python":
        mod, name = _pykernel, "python"
    elif backend == "cython":
        from . import _ckernel as mod  # noqa: N813
        name = "cython"
    x, xp, xpp = (float(v) for v in state0)
    out = mod.integrate3(problem.a2, problem.a1, problem.a0, problem.n,
                         problem.g0, problem.g1, problem.g2,
                         float(t0), x, xp, xpp, float(t_end), float(rtol), float(atol),
                         float(h_win), [float(s) for s in np.atleast_1d(t_eval)],
                         int(max_zeros), int(zero_dir), float(escape), float(h_init),
                         int(max_steps))
    status, t, x, xp, xpp, q1, q2, zeros, samples, nsteps = out
    return KernelResult(int(status), float(t), np.array([x, xp, xpp]), np.array([q1, q2]),
                        np.array(zeros, dtype=float).reshape(-1, 3),
                        np.array(samples, dtype=float).reshape(-1, 3), int(nsteps), name)
