"""Periodic interface oscillations and their heteroclinic bifurcation.

Near an interface of a sign-changing profile, ``F = (1 - y)^mu phi(s)`` with
``s = ln(1 - y)`` and ``mu = 3/n``. Far from the support centre the amplitude
``phi`` solves the autonomous equation

    phi''' + 3(mu-1) phi'' + (3mu^2 - 6mu + 2) phi' + mu(mu-1)(mu-2) phi + phi |phi|^{-n} = 0

whose stable periodic orbit carries the oscillations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, OrbitEscape, ParameterError
from .kernels import (STATUS_DONE, STATUS_ESCAPE, STATUS_ZERO, KernelResult,
                      ThirdOrderProblem, integrate)
from .numerics import solve_bracketed

N_PLUS = 9.0 / (3.0 + math.sqrt(3.0))
N_H_REFERENCE = 1.7598665026


def oscillatory_coefficients(n: float) -> tuple[float, float, float]:
    """Coefficients ``(a2, a1, a0)`` of the linear part for ``mu = 3/n``."""
    if not n > 0.0:
        raise ParameterError("n must be positive")
    mu = 3.0 / n
    return 3.0 * (mu - 1.0), 3.0 * mu * mu - 6.0 * mu + 2.0, mu * (mu - 1.0) * (mu - 2.0)


def oscillatory_problem(n: float) -> ThirdOrderProblem:
    a2, a1, a0 = oscillatory_coefficients(n)
    return ThirdOrderProblem(a2, a1, a0, n, 1.0, 0.0, 0.0)


def oscillatory_rhs(n: float):
    """Vector field ``(phi, phi', phi'') -> (phi', phi'', phi''')``.

    Raises ``NumericalError`` at ``phi = 0`` when ``n >= 1``: there the
    nonlinearity has no value and zeros must be crossed by the kernel's
    local patch.
    """
    if not 0.0 < n < 2.0:
        raise ParameterError("oscillatory_rhs needs n in (0, 2)")
    a2, a1, a0 = oscillatory_coefficients(n)

    def rhs(state):
        phi, dphi, d2phi = state
        if phi == 0.0:
            if n >= 1.0:
                raise NumericalError("phi = 0 must be crossed by the zero patch")
            nl = 0.0
        else:
            nl = math.copysign(abs(phi) ** (1.0 - n), phi)
        return np.array([dphi, d2phi, -a2 * d2phi - a1 * dphi - a0 * phi - nl])

    return rhs


def equilibria(n: float) -> tuple[float, float] | None:
    """Constant solutions ``phi_+-`` (exist for ``3/2 < n < 3``), else ``None``."""
    _, _, a0 = oscillatory_coefficients(n)
    if a0 >= 0.0:
        return None
    amp = (-1.0 / a0) ** (1.0 / n)
    return amp, -amp


def amplitude_scale(n: float) -> float:
    """Natural size of the orbit: the balance ``|a0| phi ~ phi^{1-n}``."""
    _, _, a0 = oscillatory_coefficients(n)
    return abs(a0) ** (-1.0 / n) if abs(a0) > 1e-12 else 1.0


@dataclass
class PeriodicOrbit:
    """One period of the oscillation, starting on the section ``phi = 0, phi' > 0``.

    Attributes
    ----------
    samples : ndarray, shape (M, 3)
        ``(phi, phi', phi'')`` at ``s_j = j T / M``.
    floquet_moduli : ndarray
        Moduli of the two nontrivial multipliers, descending.
    closure_defect : float
        ``|state(T) - state(0)|`` relative to the orbit's sup-norm.
    """

    n: float
    mu: float
    period: float
    samples: np.ndarray
    section_state: np.ndarray
    floquet_moduli: np.ndarray = field(default_factory=lambda: np.array([]))
    phase_multiplier: float = float("nan")
    closure_defect: float = float("nan")
    int_dphi_sq: float = float("nan")
    int_d2phi_sq: float = float("nan")
    section: str = "phi=0, dphi>0"
    multipliers: np.ndarray = field(default_factory=lambda: np.array([]))
    return_map_jacobian: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    @property
    def phase_grid(self) -> np.ndarray:
        return np.arange(self.samples.shape[0]) * self.period / self.samples.shape[0]

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.samples[:, 0])))

    def energy_identity_defect(self) -> float:
        """Relative defect of ``int phi''^2 = (3mu^2 - 6mu + 2) int phi'^2``."""
        k = 3 * self.mu ** 2 - 6 * self.mu + 2
        return abs(self.int_d2phi_sq - k * self.int_dphi_sq) / abs(self.int_d2phi_sq)

    def state_at(self, s: float, rtol: float = 1e-12) -> np.ndarray:
        """Orbit state at phase ``s`` (any real), by integration from the section."""
        s = float(s) % self.period
        if s == 0.0:
            return self.section_state.copy()
        scale = self.amplitude
        res = integrate(oscillatory_problem(self.n), 0.0, self.section_state, s,
                        rtol=rtol, atol=1e-3 * rtol * scale, h_win=_window(self))
        return res.state


def _window(orbit_or_period) -> float:
    period = orbit_or_period.period if isinstance(orbit_or_period, PeriodicOrbit) else orbit_or_period
    return 1e-7 * max(period, 1e-3)


def exact_orbit_n1(samples: int = 2000) -> PeriodicOrbit:
    """Closed-form periodic orbit of ``phi''' + 6phi'' + 11phi' + 6phi = -sign(phi)``.

    On a positive half-period ``phi = -1/6 + C1 e^{-s} + C2 e^{-2s} + C3 e^{-3s}``;
    the half-period shift maps the state to its negative. With
    ``q = e^{-T/2}`` the matching conditions reduce to
    ``q^3 - 2q^2 - 2q + 1 = 0`` and ``T = -2 ln q``.
    """
    q = solve_bracketed(lambda x: x ** 3 - 2 * x ** 2 - 2 * x + 1, (1e-9, 1 - 1e-9), tol=1e-15)
    period = -2.0 * math.log(q)
    # phi(0)=0, phi(T/2)=0, and antisymmetry of phi', phi'' across the half period
    mat = np.array([
        [1.0, 1.0, 1.0],
        [q, q ** 2, q ** 3],
        [1.0 + q, 2.0 * (1.0 + q ** 2), 3.0 * (1.0 + q ** 3)],
    ])
    c = np.linalg.solve(mat, np.array([1 / 6, 1 / 6, 0.0]))
    rates = np.array([1.0, 2.0, 3.0])

    def half(s):
        e = np.exp(-np.outer(s, rates))
        phi = -1 / 6 + e @ c
        dphi = e @ (-rates * c)
        d2phi = e @ (rates ** 2 * c)
        return np.column_stack([phi, dphi, d2phi])

    s = np.arange(samples) * period / samples
    first = s < period / 2
    out = np.empty((samples, 3))
    out[first] = half(s[first])
    out[~first] = -half(s[~first] - period / 2)
    section = half(np.array([0.0]))[0]
    section[0] = 0.0
    # energy integrals over one period: twice the half-period value
    e_half = _exact_integrals(c, period / 2)
    orbit = PeriodicOrbit(n=1.0, mu=3.0, period=period, samples=out, section_state=section,
                          closure_defect=0.0, int_dphi_sq=2 * e_half[0],
                          int_d2phi_sq=2 * e_half[1])
    orbit.theta = q  # type: ignore[attr-defined]
    return orbit


def _exact_integrals(c, half_period):
    rates = np.array([1.0, 2.0, 3.0])
    i1 = i2 = 0.0
    for a in range(3):
        for b in range(3):
            r = rates[a] + rates[b]
            base = c[a] * c[b] * (1 - math.exp(-r * half_period)) / r
            i1 += base * rates[a] * rates[b]
            i2 += base * rates[a] ** 2 * rates[b] ** 2
    return i1, i2


def _return(problem, v, w, t_max, scale, rtol, h_win) -> KernelResult:
    return integrate(problem, 0.0, (0.0, v, w), t_max, rtol=rtol, atol=1e-3 * rtol * scale,
                     h_win=h_win, max_zeros=1, zero_dir=1, escape=1e6 * scale)


def find_periodic_orbit(n: float, initial_state=None, *, transient: float = 50.0,
                        samples: int = 2000, rtol: float = 1e-12, t_max: float = 200.0,
                        compute_floquet: bool = True, newton_tol: float = 1e-12,
                        escape_factor: float = 1e3) -> PeriodicOrbit:
    """Attracting periodic orbit through the section ``phi = 0, phi' > 0``.

    Integrates ``transient`` time units, then Newton-polishes the fixed point
    of the return map (finite-difference Jacobian).

    Raises
    ------
    OrbitEscape
        The trajectory leaves a bounded region (beyond the bifurcation value or
        outside the basin).
    NumericalError
        No sign changes (non-oscillatory regime) or Newton failure.
    """
    if not 0.0 < n < 2.0:
        raise ParameterError("find_periodic_orbit needs n in (0, 2)")
    problem = oscillatory_problem(n)
    scale = amplitude_scale(n)
    eq = equilibria(n)
    bound = escape_factor * (eq[0] if eq else scale)
    if initial_state is None:
        initial_state = (0.0, 0.3 * scale, 0.0)
    state0 = np.asarray(initial_state, dtype=float)
    h_win = 1e-7
    res = integrate(problem, 0.0, state0, transient, rtol=1e-10, atol=1e-13 * scale,
                    h_win=h_win, escape=bound)
    if res.status == STATUS_ESCAPE:
        raise OrbitEscape(f"trajectory escaped during the transient at n={n}")
    if res.status != STATUS_DONE:
        raise NumericalError(f"transient integration failed: {res.status_name}")
    res = integrate(problem, 0.0, res.state, t_max, rtol=1e-10, atol=1e-13 * scale,
                    h_win=h_win, max_zeros=1, zero_dir=1, escape=bound)
    if res.status == STATUS_ESCAPE:
        raise OrbitEscape(f"trajectory escaped at n={n}")
    if res.status != STATUS_ZERO:
        raise NumericalError(f"no upward zero crossing within {t_max} at n={n}")
    v, w = res.state[1], res.state[2]

    def step(vw):
        r = _return(problem, vw[0], vw[1], t_max, bound, rtol, h_win)
        if r.status == STATUS_ESCAPE:
            raise OrbitEscape(f"return map escaped at n={n}")
        if r.status != STATUS_ZERO:
            raise NumericalError(f"return map found no crossing at n={n}")
        return np.array([r.state[1], r.state[2]]), r.t

    vw = np.array([v, w])
    jac = np.eye(2)
    for _ in range(25):
        img, period = step(vw)
        resid = img - vw
        sc = np.abs(vw) + 1e-300
        jac = np.empty((2, 2))
        for j in range(2):
            dx = np.zeros(2)
            dx[j] = 1e-6 * max(abs(vw[j]), 1e-3 * abs(vw).max())
            jac[:, j] = (step(vw + dx)[0] - step(vw - dx)[0]) / (2 * dx[j])
        delta = np.linalg.solve(jac - np.eye(2), -resid)
        vw = vw + delta
        if np.all(np.abs(delta) <= newton_tol * sc) and np.all(np.abs(resid) <= 1e3 * newton_tol * sc):
            break
    else:
        raise NumericalError(f"Newton on the return map did not converge at n={n}")
    section_state = np.array([0.0, vw[0], vw[1]])
    # one period sampled on the phase grid; the run stops on the next section
    # crossing, where the closure defect is measured (phi'' has a cusp at zeros
    # for n > 1, so comparing states at a fixed time near a zero is meaningless)
    grid_guess = None
    full = None
    for _ in range(2):
        period_est = float(step(vw)[1]) if grid_guess is None else grid_guess
        grid = np.arange(samples) * period_est / samples
        full = integrate(problem, 0.0, section_state, 2 * period_est, rtol=rtol,
                         atol=1e-3 * rtol * scale, h_win=h_win, t_eval=grid,
                         max_zeros=1, zero_dir=1)
        if full.status != STATUS_ZERO:
            raise NumericalError(f"orbit sampling lost the section at n={n}")
        if grid_guess is not None and full.t == grid_guess:
            break
        grid_guess = full.t
        if abs(full.t - period_est) <= 1e-14 * period_est:
            break
    period = full.t
    amp = float(np.max(np.abs(full.samples[:, 0])))
    statescale = np.max(np.abs(full.samples), axis=0)
    closure = float(np.max(np.abs(full.state - section_state) / statescale))
    orbit = PeriodicOrbit(n=n, mu=3.0 / n, period=float(period), samples=full.samples,
                          section_state=section_state, closure_defect=closure,
                          int_dphi_sq=float(full.quad[0]), int_d2phi_sq=float(full.quad[1]),
                          return_map_jacobian=jac)
    if amp == 0.0:
        raise NumericalError("degenerate orbit")
    if compute_floquet:
        floquet_multipliers(orbit, rtol=rtol)
    return orbit


def _smooth_base_point(orbit: PeriodicOrbit, rtol: float) -> np.ndarray:
    # where |phi| peaks the vector field is smooth in a neighbourhood
    k = int(np.argmax(np.abs(orbit.samples[:, 0])))
    return orbit.state_at(orbit.phase_grid[k], rtol=rtol) if k else orbit.section_state


def monodromy_matrix(orbit: PeriodicOrbit, rtol: float = 1e-12, rel_step: float = 1e-6,
                     base: np.ndarray | None = None) -> np.ndarray:
    """Finite-difference derivative of the period map.

    The variational equation is singular at zeros of ``phi`` for ``n >= 1``;
    central differences of the full flow map (which the zero patch keeps
    differentiable across transversal zeros) avoid integrating it directly.
    The base point sits where ``|phi|`` peaks, away from the non-smooth set
    ``phi = 0``; moving the base point along the orbit is a similarity
    transform and leaves the multipliers unchanged.
    """
    problem = oscillatory_problem(orbit.n)
    x0 = _smooth_base_point(orbit, rtol) if base is None else np.asarray(base, dtype=float)
    colscale = np.max(np.abs(orbit.samples), axis=0)
    mono = np.empty((3, 3))
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = rel_step * colscale[j]
        ends = []
        for sgn in (1.0, -1.0):
            r = integrate(problem, 0.0, x0 + sgn * dx, orbit.period, rtol=rtol,
                          atol=1e-3 * rtol * colscale.min(), h_win=1e-7)
            if r.status != STATUS_DONE:
                raise NumericalError(f"variational integration failed: {r.status_name}")
            ends.append(r.state)
        mono[:, j] = (ends[0] - ends[1]) / (2 * dx[j])
    return mono


def floquet_multipliers(orbit: PeriodicOrbit, rtol: float = 1e-12) -> np.ndarray:
    """Moduli of the nontrivial Floquet multipliers (descending).

    The multiplier closest to 1 is the phase direction and is stored
    separately as ``orbit.phase_multiplier``.
    """
    mono = monodromy_matrix(orbit, rtol)
    mult = np.linalg.eigvals(mono)
    k = int(np.argmin(np.abs(mult - 1.0)))
    orbit.phase_multiplier = float(mult[k].real)
    rest = np.delete(mult, k)
    moduli = np.sort(np.abs(rest))[::-1]
    orbit.multipliers = mult
    orbit.floquet_moduli = moduli
    return moduli


def floquet_eigenfunction(orbit: PeriodicOrbit, rtol: float = 1e-12) -> tuple[complex, np.ndarray]:
    """Leading nontrivial multiplier and the perturbation it carries along one period.

    Returns the multiplier and complex samples ``Y(s_j)`` of the linearized
    perturbation, built from differences of neighbouring trajectories.
    """
    base = _smooth_base_point(orbit, rtol)
    mono = monodromy_matrix(orbit, rtol, base=base)
    mult, vecs = np.linalg.eig(mono)
    k_phase = int(np.argmin(np.abs(mult - 1.0)))
    order = [i for i in np.argsort(-np.abs(mult)) if i != k_phase]
    k = order[0]
    vec = vecs[:, k]
    problem = oscillatory_problem(orbit.n)
    colscale = np.max(np.abs(orbit.samples), axis=0)
    grid = orbit.phase_grid
    parts = []
    for comp in (vec.real, vec.imag):
        if np.allclose(comp, 0.0):
            parts.append(np.zeros(grid.size))
            continue
        dx = 1e-6 * comp / np.max(np.abs(comp / colscale))
        runs = []
        for sgn in (1.0, -1.0):
            r = integrate(problem, 0.0, base + sgn * dx, orbit.period,
                          rtol=rtol, atol=1e-3 * rtol * colscale.min(), h_win=1e-7, t_eval=grid)
            runs.append(r.samples[:, 0])
        parts.append((runs[0] - runs[1]) / 2.0)
    y = parts[0] + 1j * parts[1]
    return complex(mult[k]), y / np.max(np.abs(y))


def stability_form_terms(orbit: PeriodicOrbit, y: np.ndarray, cutoff: float = 1e-3) -> tuple[float, float, float]:
    """The three terms of the real part of the quadratic form on ``Y``.

    ``-3(mu-1) int |Y'|^2``, ``mu(mu-1)(mu-2) int |Y|^2`` and
    ``(1-n) int |phi|^{-n} |Y|^2``; the last integral skips the points where
    ``|phi| < cutoff * max|phi|`` (it diverges at zeros of ``phi`` for n >= 1,
    which only strengthens its sign).
    """
    mu, n = orbit.mu, orbit.n
    ds = orbit.period / y.size
    dy = (np.roll(y, -1) - np.roll(y, 1)) / (2 * ds)
    phi = orbit.samples[:, 0]
    keep = np.abs(phi) >= cutoff * np.max(np.abs(phi))
    t1 = -3.0 * (mu - 1.0) * float(np.sum(np.abs(dy) ** 2) * ds)
    t2 = mu * (mu - 1.0) * (mu - 2.0) * float(np.sum(np.abs(y) ** 2) * ds)
    t3 = (1.0 - n) * float(np.sum(np.abs(phi[keep]) ** -n * np.abs(y[keep]) ** 2) * ds)
    return t1, t2, t3


@dataclass
class BifurcationTrace:
    """Continuation of the periodic orbit in ``n`` up to its disappearance."""

    n_values: np.ndarray
    periods: np.ndarray
    n_h_estimate: float
    bracket: tuple[float, float]
    threshold: float
    failure_reasons: dict = field(default_factory=dict)

    def final_decade(self) -> tuple[np.ndarray, np.ndarray]:
        """Samples within the last tenth of the traced range below ``n_h``."""
        lo = self.n_values.min()
        cut = self.n_h_estimate - 0.1 * (self.n_h_estimate - lo)
        keep = self.n_values >= cut
        order = np.argsort(self.n_values[keep])
        return self.n_values[keep][order], self.periods[keep][order]


def _dwell_fraction(problem, section_state, period, eq_amp, scale) -> float:
    grid = np.linspace(0.0, period, 4001)[:-1]
    r = integrate(problem, 0.0, section_state, period, rtol=1e-10, atol=1e-13 * scale,
                  h_win=1e-7, t_eval=grid)
    near = np.abs(np.abs(r.samples[:, 0]) - eq_amp) < 1e-2 * eq_amp
    return float(np.mean(near))


def _orbit_or_reason(n, seed, period_cap, transient):
    try:
        orb = find_periodic_orbit(n, seed, transient=transient, samples=16,
                                  compute_floquet=False, rtol=1e-11, t_max=period_cap,
                                  newton_tol=1e-10, escape_factor=50.0)
    except OrbitEscape:
        return None, "escape"
    except NumericalError as exc:
        return None, f"lost: {exc}"
    if orb.period > period_cap:
        return None, "period-cap"
    eq = equilibria(n)
    if eq is not None:
        frac = _dwell_fraction(oscillatory_problem(n), orb.section_state, orb.period, eq[0],
                               amplitude_scale(n))
        if frac > 0.5:
            return None, "dwell"
    return orb, "ok"


def trace_heteroclinic_bifurcation(n_range: tuple[float, float] = (1.6, 1.9),
                                   period_cap: float = 50.0, step: float = 0.02,
                                   tol: float = 1e-5, transient: float = 200.0) -> BifurcationTrace:
    """Continue the orbit in ``n`` and bisect the value where it disappears.

    Each accepted orbit seeds the next ``n``. Divergence is declared on escape,
    on a period above ``period_cap``, or when the orbit spends more than half
    its period within 1% of the equilibria.
    """
    lo, hi = map(float, n_range)
    if not (1.5 < lo < hi < N_PLUS + 1e-12):
        raise ParameterError("n_range must lie inside (3/2, n_+)")
    if period_cap < 20:
        raise ParameterError("period_cap must be at least 20")
    ns, ts, reasons = [], [], {}
    orb, why = _orbit_or_reason(lo, None, period_cap, transient)
    if orb is None:
        raise NumericalError(f"no periodic orbit at the start of the range (n={lo}: {why})")
    ns.append(lo)
    ts.append(orb.period)
    good_n, good_orb = lo, orb
    bad_n = None
    n = lo
    h = step
    while bad_n is None and n < hi:
        trial = min(n + h, hi)
        orb, why = _orbit_or_reason(trial, good_orb.section_state, period_cap, transient)
        if orb is None:
            reasons[trial] = why
            bad_n = trial
            break
        ns.append(trial)
        ts.append(orb.period)
        good_n, good_orb, n = trial, orb, trial
    if bad_n is None:
        raise NumericalError("the orbit persisted over the whole range")
    while bad_n - good_n > tol:
        mid = 0.5 * (good_n + bad_n)
        orb, why = _orbit_or_reason(mid, good_orb.section_state, period_cap, transient)
        if orb is None:
            reasons[mid] = why
            bad_n = mid
        else:
            ns.append(mid)
            ts.append(orb.period)
            good_n, good_orb = mid, orb
    order = np.argsort(ns)
    return BifurcationTrace(n_values=np.array(ns)[order], periods=np.array(ts)[order],
                            n_h_estimate=0.5 * (good_n + bad_n), bracket=(good_n, bad_n),
                            threshold=period_cap, failure_reasons=reasons)


def _unstable_branch_escapes(n: float, offset: float, t_max: float) -> bool:
    a2, a1, a0 = oscillatory_coefficients(n)
    eq = equilibria(n)
    if eq is None:
        raise ParameterError("equilibria exist only for 3/2 < n < 3")
    # linearisation at phi_+: the nonlinear slope is (1 - n) phi_+^{-n} = (n - 1) a0
    roots = np.roots([1.0, a2, a1, n * a0])
    unstable = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real > 0.0]
    if len(unstable) != 1:
        raise NumericalError(f"expected one unstable direction at phi_+, got roots {roots}")
    lam = unstable[0]
    start = np.array([eq[0], 0.0, 0.0]) - offset * eq[0] * np.array([1.0, lam, lam * lam])
    res = integrate(oscillatory_problem(n), 0.0, start, t_max, rtol=1e-12, atol=1e-16,
                    h_win=1e-8, escape=20.0 * eq[0])
    if res.status not in (STATUS_DONE, STATUS_ESCAPE):
        raise NumericalError(f"unstable-manifold run failed at n={n}: {res.status_name}")
    return res.status == STATUS_ESCAPE


def heteroclinic_connection_exponent(bracket: tuple[float, float] = (1.7, 1.85), *,
                                     offset: float = 1e-7, t_max: float = 300.0,
                                     tol: float = 1e-12) -> float:
    """Locate ``n_h`` as the exponent where ``phi_+`` connects to ``phi_-``.

    Independent of the continuation in :func:`trace_heteroclinic_bifurcation`:
    the one-dimensional unstable manifold of ``phi_+`` (the branch heading
    towards ``phi < phi_+``) either turns back below ``phi_-`` or escapes past
    it, and the switch between the two fates is bisected in ``n``.
    """
    lo, hi = map(float, bracket)
    if not 1.5 < lo < hi < 3.0:
        raise ParameterError("bracket must lie inside (3/2, 3)")
    esc_lo = _unstable_branch_escapes(lo, offset, t_max)
    esc_hi = _unstable_branch_escapes(hi, offset, t_max)
    if esc_lo == esc_hi:
        raise ParameterError("the unstable manifold has the same fate at both ends of the bracket")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _unstable_branch_escapes(mid, offset, t_max) == esc_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
