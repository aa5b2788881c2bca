"""Adaptive Dormand-Prince 5(4) integration with dense output and events."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import MaxIterationsExceeded, NonFiniteState, StepSizeUnderflow

# Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])


@dataclass
class _DenseStep:
    t0: float
    h: float
    r: np.ndarray  # shape (5, dim)

    def __call__(self, t: float) -> np.ndarray:
        th = (t - self.t0) / self.h
        r1, r2, r3, r4, r5 = self.r
        return r1 + th * (r2 + (1 - th) * (r3 + th * (r4 + (1 - th) * r5)))


@dataclass
class Trajectory:
    """Accepted steps of an integration.

    Attributes
    ----------
    times : ndarray
        Strictly increasing step times.
    states : ndarray
        ``states[i]`` is the state at ``times[i]``.
    events : list of (time, state, event_id)
        Refined crossings of the event functions.
    status : str
        ``"completed"`` or ``"terminated"`` (a terminal event fired).
    """

    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    status: str = "completed"
    _dense: list = field(default_factory=list, repr=False)

    @property
    def t(self) -> float:
        return float(self.times[-1])

    @property
    def y(self) -> np.ndarray:
        return self.states[-1]

    def sample(self, t) -> np.ndarray:
        """Dense-output interpolant at time(s) ``t`` inside the span."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, len(self._dense) - 1)
        out = np.array([self._dense[i](x) for i, x in zip(idx, ts)])
        return out if np.ndim(t) else out[0]


def _rk_step(rhs, t, y, h, k1):
    ks = [k1]
    for s in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[s], ks) if a != 0.0)
        ks.append(np.asarray(rhs(t + _C[s] * h, yi), dtype=float))
    y_new = y + h * sum(b * k for b, k in zip(_B, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, err, ks


def _dense_coeffs(y, y_new, h, ks):
    ydiff = y_new - y
    bspl = h * ks[0] - ydiff
    r5 = h * sum(d * k for d, k in zip(_D, ks) if d != 0.0)
    return np.array([y, ydiff, bspl, ydiff - h * ks[6] - bspl, r5])


def _refine_event(g, dense: _DenseStep, ta, tb, ga, gb, tol):
    # secant (Illinois variant) on the dense interpolant
    for _ in range(100):
        tc = tb - gb * (tb - ta) / (gb - ga)
        gc = g(tc, dense(tc))
        if gc == 0.0 or abs(tb - ta) < tol:
            return tc
        if gc * gb < 0.0:
            ta, ga = tb, gb
        else:
            ga *= 0.5
        tb, gb = tc, gc
        if abs(tb - ta) < tol:
            return tb
    return tb


def integrate_ivp(rhs: Callable[[float, np.ndarray], np.ndarray], y0: Sequence[float],
                  span: tuple[float, float], tol: float = 1e-10,
                  event_fns: Sequence[Callable[[float, np.ndarray], float]] = (),
                  max_step: float = np.inf, first_step: float | None = None,
                  max_steps: int = 1_000_000) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` across ``span`` (either direction).

    The local error of each step, measured as ``|err_i| / (1 + |y_i|)``, stays
    below ``tol``. Every sign change of an event function is refined on the
    dense output to ``tol`` in time. An event function with a truthy
    ``terminal`` attribute stops the integration at its first crossing.

    Raises
    ------
    StepSizeUnderflow
        The step collapsed (stiff or singular blow-up).
    NonFiniteState
        The vector field produced inf/NaN.
    """
    t0, t1 = map(float, span)
    direction = 1.0 if t1 >= t0 else -1.0
    y = np.array(y0, dtype=float)
    t = t0
    times, states, dense, events = [t], [y.copy()], [], []
    if t1 == t0:
        traj = Trajectory(np.array(times), np.array(states), events)
        traj._dense = [_DenseStep(t0, 1.0, np.array([y, 0 * y, 0 * y, 0 * y, 0 * y]))]
        return traj

    k1 = np.asarray(rhs(t, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise NonFiniteState(f"non-finite vector field at t={t}")
    span_len = abs(t1 - t0)
    if first_step is None:
        scale = 1.0 + np.abs(y)
        d0 = np.linalg.norm(y / scale) / np.sqrt(y.size)
        d1 = np.linalg.norm(k1 / scale) / np.sqrt(y.size)
        h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * span_len
        h = min(h, span_len, max_step, (tol ** 0.2) * span_len)
    else:
        h = min(abs(first_step), span_len)
    gvals = [g(t, y) for g in event_fns]
    status = "completed"
    nsteps = 0
    while direction * (t1 - t) > 0.0:
        nsteps += 1
        if nsteps > max_steps:
            raise MaxIterationsExceeded(f"more than {max_steps} steps")
        h = min(h, abs(t1 - t), max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(f"step underflow at t={t:.16g}")
        hs = direction * h
        y_new, err, ks = _rk_step(rhs, t, y, hs, k1)
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(ks[-1])):
            h *= 0.25
            if h < 1e-14 * max(1.0, abs(t)):
                raise NonFiniteState(f"non-finite state near t={t:.16g}")
            continue
        sc = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
        enorm = float(np.sqrt(np.mean((err / sc) ** 2)))
        if enorm > 1.0:
            h *= max(0.2, 0.9 * enorm ** -0.2)
            continue
        t_new = t + hs if abs(t1 - (t + hs)) > 1e-15 * max(1.0, abs(t1)) else t1
        step = _DenseStep(t, hs, _dense_coeffs(y, y_new, hs, ks))
        terminal_hit = None
        new_g = [g(t_new, y_new) for g in event_fns]
        hits = []
        for i, g in enumerate(event_fns):
            ga, gb = gvals[i], new_g[i]
            if ga != 0.0 and (gb == 0.0 or ga * gb < 0.0):
                tc = t_new if gb == 0.0 else _refine_event(g, step, t, t_new, ga, gb, tol)
                hits.append((tc, i))
        for tc, i in sorted(hits, key=lambda x: direction * x[0]):
            events.append((tc, step(tc), i))
            if getattr(event_fns[i], "terminal", False):
                terminal_hit = tc
                break
        if terminal_hit is not None:
            y_end = step(terminal_hit)
            times.append(terminal_hit)
            states.append(y_end)
            dense.append(step)
            status = "terminated"
            break
        t, y, k1, gvals = t_new, y_new, ks[-1], new_g
        times.append(t)
        states.append(y.copy())
        dense.append(step)
        h *= min(5.0, max(0.2, 0.9 * max(enorm, 1e-10) ** -0.2))
    traj = Trajectory(np.array(times), np.array(states), events, status)
    traj._dense = dense
    return traj
