"""Pure-Python third-order kernel (reference implementation and fallback).

Integrates

    x''' = -a2 x'' - a1 x' - a0 x - G(t) x |x|**(-n),   G(t) = g0 + g1 t + g2 exp(t)

forward in t with Dormand-Prince 5(4). Two quadratures, the integrals of
x'**2 and x''**2, ride along. For 0 < n < 2 the nonlinearity is continuous but
not smooth at x = 0. Each transversal zero is crossed by a local model: a
quartic Taylor polynomial of the regular part plus the closed-form triple
integral of the leading singular forcing. The model is matched to the
numerical state just before the zero and evaluated just after it.

The compiled module ``_ckernel`` implements the same algorithm.
"""

from __future__ import annotations

import math

STATUS_DONE = 0
STATUS_ZERO = 1
STATUS_ESCAPE = 2
STATUS_UNDERFLOW = 3
STATUS_MAXSTEPS = 4
STATUS_GRAZING = 5

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                 22 / 525, -1 / 40)
_D1, _D3, _D4, _D5, _D6, _D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                                 -10690763975 / 1880347072, 701980252875 / 199316789632,
                                 -1453857185 / 822651844, 69997945 / 29380423)

# 4-point Gauss-Legendre on [-1, 1]
_GL_X = (-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526)
_GL_W = (0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538)


class _Problem:
    __slots__ = ("a2", "a1", "a0", "n", "g0", "g1", "g2")

    def __init__(self, a2, a1, a0, n, g0, g1, g2):
        self.a2, self.a1, self.a0 = a2, a1, a0
        self.n, self.g0, self.g1, self.g2 = n, g0, g1, g2

    def weight(self, t):
        g = self.g0 + self.g1 * t
        if self.g2 != 0.0:
            g += self.g2 * math.exp(t)
        return g

    def weight_slope(self, t):
        s = self.g1
        if self.g2 != 0.0:
            s += self.g2 * math.exp(t)
        return s

    def rhs(self, t, x, xp, xpp):
        n = self.n
        if n == 0.0:
            nl = x
        elif x == 0.0:
            nl = 0.0
        else:
            nl = math.copysign(abs(x) ** (1.0 - n), x)
        return -self.a2 * xpp - self.a1 * xp - self.a0 * x - self.weight(t) * nl


def _zero_distance(x, xp, xpp):
    """Smallest positive root of the quadratic Taylor model of x."""
    if x == 0.0:
        return 0.0
    a = 0.5 * xpp
    if a == 0.0 or abs(a) * abs(x) < 1e-12 * xp * xp:
        if xp == 0.0:
            return math.inf
        tau = -x / xp
        return tau if tau > 0.0 else math.inf
    disc = xp * xp - 4.0 * a * x
    if disc < 0.0:
        return math.inf
    sq = math.sqrt(disc)
    q = -0.5 * (xp + math.copysign(sq, xp))
    roots = []
    if q != 0.0:
        roots.append(x / q)
        roots.append(q / a)
    best = math.inf
    for r in roots:
        if 0.0 < r < best:
            best = r
    return best


def _model(p: _Problem, tz, v, w, sigma):
    """Local state (x, x', x'') at tz + sigma for a zero at tz with x' = v, x'' = w."""
    n = p.n
    a2, a1, a0 = p.a2, p.a1, p.a0
    c3 = -a2 * w - a1 * v
    c4 = -a2 * c3 - a1 * w - a0 * v
    s = sigma
    x = s * (v + s * (0.5 * w + s * (c3 / 6.0 + s * c4 / 24.0)))
    xp = v + s * (w + s * (0.5 * c3 + s * c4 / 6.0))
    xpp = w + s * (c3 + 0.5 * s * c4)
    if v == 0.0 or s == 0.0:
        return x, xp, xpp
    G0 = p.weight(tz)
    G1 = p.weight_slope(tz)
    A0 = G0
    A1 = G0 * (1.0 - n) * w / (2.0 * v) + G1
    if n == 0.0:
        K = -v
    else:
        K = -math.copysign(abs(v) ** (1.0 - n), v)
    sg = 1.0 if s > 0.0 else -1.0
    a = abs(s)
    p2 = a ** (2.0 - n)
    p3 = p2 * a
    p4 = p3 * a
    p5 = p4 * a
    i1 = K * (A0 * p2 / (2.0 - n) + A1 * sg * p3 / (3.0 - n))
    i2 = K * (A0 * sg * p3 / ((2.0 - n) * (3.0 - n)) + A1 * p4 / ((3.0 - n) * (4.0 - n)))
    i3 = K * (A0 * p4 / ((2.0 - n) * (3.0 - n) * (4.0 - n))
              + A1 * sg * p5 / ((3.0 - n) * (4.0 - n) * (5.0 - n)))
    return (x + i3,
            xp + i2 - a2 * i3,
            xpp + i1 - a2 * i2 + (a2 * a2 - a1) * i3)


def _solve3(m, r):
    (a, b, c), (d, e, f), (g, h, i) = m
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if det == 0.0:
        return None
    x0 = (r[0] * (e * i - f * h) - b * (r[1] * i - f * r[2]) + c * (r[1] * h - e * r[2])) / det
    x1 = (a * (r[1] * i - f * r[2]) - r[0] * (d * i - f * g) + c * (d * r[2] - r[1] * g)) / det
    x2 = (a * (e * r[2] - r[1] * h) - b * (d * r[2] - r[1] * g) + r[0] * (d * h - e * g)) / det
    return x0, x1, x2


def _match_zero(p: _Problem, t, x, xp, xpp, x3, d):
    """Find (d, v, w) so the local model at sigma = -d reproduces the state."""
    v = xp + xpp * d + 0.5 * x3 * d * d
    w = xpp + x3 * d
    if v == 0.0:
        return None
    for _ in range(30):
        m0 = _model(p, t + d, v, w, -d)
        res = (m0[0] - x, m0[1] - xp, m0[2] - xpp)
        dd = 1e-6 * d if d > 0.0 else 1e-12
        dv = 1e-7 * abs(v)
        dw = 1e-7 * (abs(w) + abs(v))
        cols = []
        for (ed, ev, ew, step) in ((dd, 0.0, 0.0, dd), (0.0, dv, 0.0, dv), (0.0, 0.0, dw, dw)):
            mp = _model(p, t + d + ed, v + ev, w + ew, -(d + ed))
            mm = _model(p, t + d - ed, v - ev, w - ew, -(d - ed))
            cols.append(((mp[0] - mm[0]) / (2 * step), (mp[1] - mm[1]) / (2 * step),
                         (mp[2] - mm[2]) / (2 * step)))
        jac = tuple((cols[0][k], cols[1][k], cols[2][k]) for k in range(3))
        sol = _solve3(jac, (-res[0], -res[1], -res[2]))
        if sol is None:
            return None
        d += sol[0]
        v += sol[1]
        w += sol[2]
        if d < 0.0:
            d = 0.0
        if (abs(sol[0]) <= 1e-15 * (d + 1e-300) + 1e-300
                and abs(sol[1]) <= 1e-14 * abs(v) and abs(sol[2]) <= 1e-13 * (abs(w) + abs(v))):
            break
    return d, v, w


def _window_quad(p, tz, v, w, s0, s1):
    """Integrals of x'**2 and x''**2 of the local model over [s0, s1]."""
    q1 = q2 = 0.0
    for lo, hi in ((s0, min(s1, 0.0)), (max(s0, 0.0), s1)):
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for xg, wg in zip(_GL_X, _GL_W):
            st = _model(p, tz, v, w, mid + half * xg)
            q1 += wg * half * st[1] * st[1]
            q2 += wg * half * st[2] * st[2]
    return q1, q2


def integrate3(a2, a1, a0, n, g0, g1, g2, t0, x, xp, xpp, t_end, rtol, atol,
               h_win, t_eval, max_zeros, zero_dir, escape, h_init, max_steps):
    """Integrate from ``t0`` to ``t_end`` (``t_end > t0``).

    Parameters
    ----------
    t_eval : sequence of float
        Increasing sample times in ``[t0, t_end]``.
    max_zeros : int
        Stop at the ``max_zeros``-th counted zero (negative: never).
    zero_dir : int
        Count only zeros with ``sign(x') == zero_dir`` (0 counts every zero).
    escape : float
        Stop when ``|x|`` exceeds this bound.

    Returns
    -------
    tuple
        ``(status, t, x, xp, xpp, q1, q2, zeros, samples, nsteps)`` where
        ``zeros`` lists ``(t, x', x'')`` at each crossing and ``samples`` lists
        ``(x, x', x'')`` at each ``t_eval`` reached.
    """
    p = _Problem(float(a2), float(a1), float(a0), float(n), float(g0), float(g1), float(g2))
    n = p.n
    patch = 0.0 < n < 2.0
    t = float(t0)
    x, xp, xpp = float(x), float(xp), float(xpp)
    q1 = q2 = 0.0
    zeros = []
    samples = []
    t_eval = [float(s) for s in t_eval]
    ie = 0
    ne = len(t_eval)
    while ie < ne and t_eval[ie] <= t:
        samples.append((x, xp, xpp))
        ie += 1
    counted = 0
    nsteps = 0
    span = t_end - t
    h = h_init if h_init > 0.0 else 1e-3 * span
    k1 = p.rhs(t, x, xp, xpp)
    err_old = 1e-4
    d_hint = -1.0
    while t < t_end:
        if nsteps >= max_steps:
            return STATUS_MAXSTEPS, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
        nsteps += 1
        d = _zero_distance(x, xp, xpp) if patch else math.inf
        if d_hint > 0.0:
            if d > h_win:
                d = d_hint
            d_hint = -1.0
        if patch and d <= h_win:
            m = _match_zero(p, t, x, xp, xpp, k1, d)
            if m is None:
                return STATUS_GRAZING, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
            d, v, w = m
            tz = t + d
            if tz > t_end:
                s_end = t_end - tz
                while ie < ne and t_eval[ie] <= t_end:
                    samples.append(_model(p, tz, v, w, t_eval[ie] - tz))
                    ie += 1
                a, b = _window_quad(p, tz, v, w, -d, s_end)
                x, xp, xpp = _model(p, tz, v, w, s_end)
                return STATUS_DONE, t_end, x, xp, xpp, q1 + a, q2 + b, zeros, samples, nsteps
            fresh = tz > t0 or d > 0.0
            if fresh:
                zeros.append((tz, v, w))
                if zero_dir == 0 or (v > 0.0) == (zero_dir > 0):
                    counted += 1
            if fresh and 0 <= max_zeros <= counted:
                while ie < ne and t_eval[ie] <= tz:
                    samples.append(_model(p, tz, v, w, t_eval[ie] - tz))
                    ie += 1
                a, b = _window_quad(p, tz, v, w, -d, 0.0)
                return STATUS_ZERO, tz, 0.0, v, w, q1 + a, q2 + b, zeros, samples, nsteps
            s_end = min(h_win, t_end - tz)
            while ie < ne and t_eval[ie] <= tz + s_end:
                samples.append(_model(p, tz, v, w, t_eval[ie] - tz))
                ie += 1
            a, b = _window_quad(p, tz, v, w, -d, s_end)
            q1 += a
            q2 += b
            x, xp, xpp = _model(p, tz, v, w, s_end)
            t = tz + s_end if s_end < t_end - tz else t_end
            k1 = p.rhs(t, x, xp, xpp)
            continue

        hh = min(h, t_end - t)
        if d < math.inf:
            hh = min(hh, d - 0.5 * h_win)
        if hh < 1e-15 * max(1.0, abs(t)):
            return STATUS_UNDERFLOW, t, x, xp, xpp, q1, q2, zeros, samples, nsteps

        # Dormand-Prince stages on (x, x', x''); the quadratures use the same weights
        y1, y2, y3 = x, xp, xpp
        f1 = (y2, y3, k1)
        s2 = (y1 + hh * _A21 * f1[0], y2 + hh * _A21 * f1[1], y3 + hh * _A21 * f1[2])
        f2 = (s2[1], s2[2], p.rhs(t + _C2 * hh, *s2))
        s3 = tuple(yv + hh * (_A31 * a_ + _A32 * b_)
                   for yv, a_, b_ in zip((y1, y2, y3), f1, f2))
        f3 = (s3[1], s3[2], p.rhs(t + _C3 * hh, *s3))
        s4 = tuple(yv + hh * (_A41 * a_ + _A42 * b_ + _A43 * c_)
                   for yv, a_, b_, c_ in zip((y1, y2, y3), f1, f2, f3))
        f4 = (s4[1], s4[2], p.rhs(t + _C4 * hh, *s4))
        s5 = tuple(yv + hh * (_A51 * a_ + _A52 * b_ + _A53 * c_ + _A54 * d_)
                   for yv, a_, b_, c_, d_ in zip((y1, y2, y3), f1, f2, f3, f4))
        f5 = (s5[1], s5[2], p.rhs(t + _C5 * hh, *s5))
        s6 = tuple(yv + hh * (_A61 * a_ + _A62 * b_ + _A63 * c_ + _A64 * d_ + _A65 * e_)
                   for yv, a_, b_, c_, d_, e_ in zip((y1, y2, y3), f1, f2, f3, f4, f5))
        f6 = (s6[1], s6[2], p.rhs(t + hh, *s6))
        yn = tuple(yv + hh * (_B1 * a_ + _B3 * c_ + _B4 * d_ + _B5 * e_ + _B6 * f_)
                   for yv, a_, c_, d_, e_, f_ in zip((y1, y2, y3), f1, f3, f4, f5, f6))
        k7 = p.rhs(t + hh, *yn)
        f7 = (yn[1], yn[2], k7)
        err = 0.0
        for i in range(3):
            e = hh * (_E1 * f1[i] + _E3 * f3[i] + _E4 * f4[i] + _E5 * f5[i]
                      + _E6 * f6[i] + _E7 * f7[i])
            sc = atol + rtol * max(abs((y1, y2, y3)[i]), abs(yn[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / 3.0)
        if not math.isfinite(err):
            h = 0.25 * hh
            continue
        if err > 1.0:
            h = hh * max(0.2, 0.9 * err ** -0.2)
            continue
        if patch and (yn[0] == 0.0 or (yn[0] > 0.0) != (x > 0.0)) and x != 0.0:
            # crossed a zero inside the step: retarget to land just before it
            tau = hh * x / (x - yn[0])
            if tau <= h_win:
                d_hint = tau
            else:
                h = tau - 0.5 * h_win
            continue

        # dense output for samples inside (t, t + hh]
        tn = t + hh
        if ie < ne and t_eval[ie] <= tn:
            ydiff = [yn[i] - (y1, y2, y3)[i] for i in range(3)]
            bspl = [hh * f1[i] - ydiff[i] for i in range(3)]
            r4 = [ydiff[i] - hh * f7[i] - bspl[i] for i in range(3)]
            r5 = [hh * (_D1 * f1[i] + _D3 * f3[i] + _D4 * f4[i] + _D5 * f5[i]
                        + _D6 * f6[i] + _D7 * f7[i]) for i in range(3)]
            y0v = (y1, y2, y3)
            while ie < ne and t_eval[ie] <= tn:
                th = (t_eval[ie] - t) / hh
                samples.append(tuple(
                    y0v[i] + th * (ydiff[i] + (1 - th) * (bspl[i] + th * (r4[i] + (1 - th) * r5[i])))
                    for i in range(3)))
                ie += 1
        q1 += hh * (_B1 * y2 * y2 + _B3 * s3[1] ** 2 + _B4 * s4[1] ** 2 + _B5 * s5[1] ** 2
                    + _B6 * s6[1] ** 2)
        q2 += hh * (_B1 * y3 * y3 + _B3 * s3[2] ** 2 + _B4 * s4[2] ** 2 + _B5 * s5[2] ** 2
                    + _B6 * s6[2] ** 2)
        if not patch and x != 0.0 and (yn[0] == 0.0 or (yn[0] > 0.0) != (x > 0.0)):
            tz, zv, zw = _locate_plain_zero(t, hh, (y1, y2, y3), yn, f1, f3, f4, f5, f6, f7)
            zeros.append((tz, zv, zw))
            if zero_dir == 0 or (zv > 0.0) == (zero_dir > 0):
                counted += 1
            if 0 <= max_zeros <= counted:
                return STATUS_ZERO, tz, 0.0, zv, zw, q1, q2, zeros, samples, nsteps
        t = tn if tn < t_end else t_end
        x, xp, xpp = yn
        k1 = k7
        if abs(x) > escape:
            return STATUS_ESCAPE, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
        fac = 0.9 * max(err, 1e-10) ** -0.17 * err_old ** 0.04
        err_old = max(err, 1e-4)
        h = hh * min(5.0, max(0.2, fac))
    return STATUS_DONE, t, x, xp, xpp, q1, q2, zeros, samples, nsteps


def _locate_plain_zero(t, hh, y0, yn, f1, f3, f4, f5, f6, f7):
    """Zero of x inside an accepted step, found by secant on the dense output."""
    ydiff = [yn[i] - y0[i] for i in range(3)]
    bspl = [hh * f1[i] - ydiff[i] for i in range(3)]
    r4 = [ydiff[i] - hh * f7[i] - bspl[i] for i in range(3)]
    r5 = [hh * (_D1 * f1[i] + _D3 * f3[i] + _D4 * f4[i] + _D5 * f5[i] + _D6 * f6[i]
                + _D7 * f7[i]) for i in range(3)]

    def dense(th, i):
        return y0[i] + th * (ydiff[i] + (1 - th) * (bspl[i] + th * (r4[i] + (1 - th) * r5[i])))

    a, b = 0.0, 1.0
    fa, fb = y0[0], yn[0]
    if fb == 0.0:
        return t + hh, yn[1], yn[2]
    for _ in range(80):
        c = b - fb * (b - a) / (fb - fa)
        fc = dense(c, 0)
        if fc == 0.0 or abs(b - a) < 1e-15:
            b = c
            break
        if (fc > 0.0) != (fb > 0.0):
            a, fa = b, fb
        else:
            fa *= 0.5
        b, fb = c, fc
        if abs(b - a) * abs(hh) < 1e-15 * max(1.0, abs(t)):
            break
    return t + b * hh, dense(b, 1), dense(b, 2)
