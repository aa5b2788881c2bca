# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled third-order kernel; same algorithm and call signature as ``_pykernel``."""

from libc.math cimport fabs, sqrt, exp, pow, copysign, INFINITY, isfinite

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432, D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072, D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844, D7 = 69997945.0 / 29380423

cdef double[4] GL_X = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                       0.8611363115940526]
cdef double[4] GL_W = [0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                       0.3478548451374538]


cdef struct Problem:
    double a2, a1, a0, n, g0, g1, g2


cdef inline double weight(Problem* p, double t) nogil:
    cdef double g = p.g0 + p.g1 * t
    if p.g2 != 0.0:
        g += p.g2 * exp(t)
    return g


cdef inline double weight_slope(Problem* p, double t) nogil:
    cdef double s = p.g1
    if p.g2 != 0.0:
        s += p.g2 * exp(t)
    return s


cdef inline double rhs(Problem* p, double t, double x, double xp, double xpp) nogil:
    cdef double nl
    if p.n == 0.0:
        nl = x
    elif x == 0.0:
        nl = 0.0
    else:
        nl = copysign(pow(fabs(x), 1.0 - p.n), x)
    return -p.a2 * xpp - p.a1 * xp - p.a0 * x - weight(p, t) * nl


cdef double zero_distance(double x, double xp, double xpp) nogil:
    cdef double a, tau, disc, sq, q, best, r
    if x == 0.0:
        return 0.0
    a = 0.5 * xpp
    if a == 0.0 or fabs(a) * fabs(x) < 1e-12 * xp * xp:
        if xp == 0.0:
            return INFINITY
        tau = -x / xp
        return tau if tau > 0.0 else INFINITY
    disc = xp * xp - 4.0 * a * x
    if disc < 0.0:
        return INFINITY
    sq = sqrt(disc)
    q = -0.5 * (xp + copysign(sq, xp))
    best = INFINITY
    if q != 0.0:
        r = x / q
        if 0.0 < r < best:
            best = r
        r = q / a
        if 0.0 < r < best:
            best = r
    return best


cdef void model(Problem* p, double tz, double v, double w, double s, double* out) nogil:
    cdef double n = p.n, a2 = p.a2, a1 = p.a1, a0 = p.a0
    cdef double c3 = -a2 * w - a1 * v
    cdef double c4 = -a2 * c3 - a1 * w - a0 * v
    cdef double x = s * (v + s * (0.5 * w + s * (c3 / 6.0 + s * c4 / 24.0)))
    cdef double xp = v + s * (w + s * (0.5 * c3 + s * c4 / 6.0))
    cdef double xpp = w + s * (c3 + 0.5 * s * c4)
    cdef double G0, G1, A0, A1, K, sg, a, p2, p3, p4, p5, i1, i2, i3
    if v == 0.0 or s == 0.0:
        out[0] = x
        out[1] = xp
        out[2] = xpp
        return
    G0 = weight(p, tz)
    G1 = weight_slope(p, tz)
    A0 = G0
    A1 = G0 * (1.0 - n) * w / (2.0 * v) + G1
    if n == 0.0:
        K = -v
    else:
        K = -copysign(pow(fabs(v), 1.0 - n), v)
    sg = 1.0 if s > 0.0 else -1.0
    a = fabs(s)
    p2 = pow(a, 2.0 - n)
    p3 = p2 * a
    p4 = p3 * a
    p5 = p4 * a
    i1 = K * (A0 * p2 / (2.0 - n) + A1 * sg * p3 / (3.0 - n))
    i2 = K * (A0 * sg * p3 / ((2.0 - n) * (3.0 - n)) + A1 * p4 / ((3.0 - n) * (4.0 - n)))
    i3 = K * (A0 * p4 / ((2.0 - n) * (3.0 - n) * (4.0 - n))
              + A1 * sg * p5 / ((3.0 - n) * (4.0 - n) * (5.0 - n)))
    out[0] = x + i3
    out[1] = xp + i2 - a2 * i3
    out[2] = xpp + i1 - a2 * i2 + (a2 * a2 - a1) * i3


cdef bint solve3(double[3][3] m, double* r, double* sol) nogil:
    cdef double a = m[0][0], b = m[0][1], c = m[0][2]
    cdef double d = m[1][0], e = m[1][1], f = m[1][2]
    cdef double g = m[2][0], h = m[2][1], i = m[2][2]
    cdef double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    if det == 0.0:
        return False
    sol[0] = (r[0] * (e * i - f * h) - b * (r[1] * i - f * r[2]) + c * (r[1] * h - e * r[2])) / det
    sol[1] = (a * (r[1] * i - f * r[2]) - r[0] * (d * i - f * g) + c * (d * r[2] - r[1] * g)) / det
    sol[2] = (a * (e * r[2] - r[1] * h) - b * (d * r[2] - r[1] * g) + r[0] * (d * h - e * g)) / det
    return True


cdef bint match_zero(Problem* p, double t, double x, double xp, double xpp, double x3,
                     double* dvw) nogil:
    cdef double d = dvw[0]
    cdef double v = xp + xpp * d + 0.5 * x3 * d * d
    cdef double w = xpp + x3 * d
    cdef double[3] m0, mp, mm, res, sol
    cdef double[3][3] jac
    cdef double dd, dv, dw, step, ed, ev, ew
    cdef int it, col, k
    if v == 0.0:
        return False
    for it in range(30):
        model(p, t + d, v, w, -d, m0)
        res[0] = -(m0[0] - x)
        res[1] = -(m0[1] - xp)
        res[2] = -(m0[2] - xpp)
        dd = 1e-6 * d if d > 0.0 else 1e-12
        dv = 1e-7 * fabs(v)
        dw = 1e-7 * (fabs(w) + fabs(v))
        for col in range(3):
            ed = dd if col == 0 else 0.0
            ev = dv if col == 1 else 0.0
            ew = dw if col == 2 else 0.0
            step = dd if col == 0 else (dv if col == 1 else dw)
            model(p, t + d + ed, v + ev, w + ew, -(d + ed), mp)
            model(p, t + d - ed, v - ev, w - ew, -(d - ed), mm)
            for k in range(3):
                jac[k][col] = (mp[k] - mm[k]) / (2.0 * step)
        if not solve3(jac, res, sol):
            return False
        d += sol[0]
        v += sol[1]
        w += sol[2]
        if d < 0.0:
            d = 0.0
        if (fabs(sol[0]) <= 1e-15 * (d + 1e-300) + 1e-300
                and fabs(sol[1]) <= 1e-14 * fabs(v) and fabs(sol[2]) <= 1e-13 * (fabs(w) + fabs(v))):
            break
    dvw[0] = d
    dvw[1] = v
    dvw[2] = w
    return True


cdef void window_quad(Problem* p, double tz, double v, double w, double s0, double s1,
                      double* q) nogil:
    cdef double lo, hi, half, mid
    cdef double[3] st
    cdef int piece, k
    q[0] = 0.0
    q[1] = 0.0
    for piece in range(2):
        if piece == 0:
            lo = s0
            hi = s1 if s1 < 0.0 else 0.0
        else:
            lo = s0 if s0 > 0.0 else 0.0
            hi = s1
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for k in range(4):
            model(p, tz, v, w, mid + half * GL_X[k], st)
            q[0] += GL_W[k] * half * st[1] * st[1]
            q[1] += GL_W[k] * half * st[2] * st[2]


cdef double dense_value(double th, double y0, double ydiff, double bspl, double r4,
                        double r5) nogil:
    return y0 + th * (ydiff + (1 - th) * (bspl + th * (r4 + (1 - th) * r5)))


def integrate3(double a2, double a1, double a0, double n, double g0, double g1, double g2,
               double t0, double x, double xp, double xpp, double t_end, double rtol,
               double atol, double h_win, t_eval, long max_zeros, int zero_dir,
               double escape, double h_init, long max_steps):
    """See ``_pykernel.integrate3``."""
    cdef Problem pr
    pr.a2 = a2
    pr.a1 = a1
    pr.a0 = a0
    pr.n = n
    pr.g0 = g0
    pr.g1 = g1
    pr.g2 = g2
    cdef Problem* p = &pr
    cdef bint patch = 0.0 < n < 2.0
    cdef double t = t0, q1 = 0.0, q2 = 0.0
    cdef list zeros = []
    cdef list samples = []
    cdef list tev = [float(s) for s in t_eval]
    cdef Py_ssize_t ne = len(tev), ie = 0
    cdef long counted = 0, nsteps = 0
    cdef double h, hh, k1, k7, err, err_old = 1e-4, d, d_hint = -1.0, tz, s_end, tn, th, fac
    cdef double tau, e, sc, te
    cdef double[3] dvw, st, qq, y0v, yn, f1, f2, f3, f4, f5, f6, f7, s2, s3, s4, s5, s6
    cdef double[3] ydiff, bspl, r4, r5
    cdef int i
    cdef bint fresh
    cdef double za, zb, zfa, zfb, zc, zfc
    cdef int it

    while ie < ne and <double>tev[ie] <= t:
        samples.append((x, xp, xpp))
        ie += 1
    h = h_init if h_init > 0.0 else 1e-3 * (t_end - t)
    k1 = rhs(p, t, x, xp, xpp)
    while t < t_end:
        if nsteps >= max_steps:
            return 4, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
        nsteps += 1
        d = zero_distance(x, xp, xpp) if patch else INFINITY
        if d_hint > 0.0:
            if d > h_win:
                d = d_hint
            d_hint = -1.0
        if patch and d <= h_win:
            dvw[0] = d
            if not match_zero(p, t, x, xp, xpp, k1, dvw):
                return 5, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
            d = dvw[0]
            tz = t + d
            if tz > t_end:
                s_end = t_end - tz
                while ie < ne and <double>tev[ie] <= t_end:
                    model(p, tz, dvw[1], dvw[2], <double>tev[ie] - tz, st)
                    samples.append((st[0], st[1], st[2]))
                    ie += 1
                window_quad(p, tz, dvw[1], dvw[2], -d, s_end, qq)
                model(p, tz, dvw[1], dvw[2], s_end, st)
                return 0, t_end, st[0], st[1], st[2], q1 + qq[0], q2 + qq[1], zeros, samples, nsteps
            fresh = tz > t0 or d > 0.0
            if fresh:
                zeros.append((tz, dvw[1], dvw[2]))
                if zero_dir == 0 or (dvw[1] > 0.0) == (zero_dir > 0):
                    counted += 1
            if fresh and 0 <= max_zeros <= counted:
                while ie < ne and <double>tev[ie] <= tz:
                    model(p, tz, dvw[1], dvw[2], <double>tev[ie] - tz, st)
                    samples.append((st[0], st[1], st[2]))
                    ie += 1
                window_quad(p, tz, dvw[1], dvw[2], -d, 0.0, qq)
                return 1, tz, 0.0, dvw[1], dvw[2], q1 + qq[0], q2 + qq[1], zeros, samples, nsteps
            s_end = h_win if h_win < t_end - tz else t_end - tz
            while ie < ne and <double>tev[ie] <= tz + s_end:
                model(p, tz, dvw[1], dvw[2], <double>tev[ie] - tz, st)
                samples.append((st[0], st[1], st[2]))
                ie += 1
            window_quad(p, tz, dvw[1], dvw[2], -d, s_end, qq)
            q1 += qq[0]
            q2 += qq[1]
            model(p, tz, dvw[1], dvw[2], s_end, st)
            x = st[0]
            xp = st[1]
            xpp = st[2]
            t = tz + s_end if s_end < t_end - tz else t_end
            k1 = rhs(p, t, x, xp, xpp)
            continue

        hh = h if h < t_end - t else t_end - t
        if d < INFINITY and d - 0.5 * h_win < hh:
            hh = d - 0.5 * h_win
        if hh < 1e-15 * (fabs(t) if fabs(t) > 1.0 else 1.0):
            return 3, t, x, xp, xpp, q1, q2, zeros, samples, nsteps

        y0v[0] = x
        y0v[1] = xp
        y0v[2] = xpp
        f1[0] = xp
        f1[1] = xpp
        f1[2] = k1
        for i in range(3):
            s2[i] = y0v[i] + hh * A21 * f1[i]
        f2[0] = s2[1]
        f2[1] = s2[2]
        f2[2] = rhs(p, t + C2 * hh, s2[0], s2[1], s2[2])
        for i in range(3):
            s3[i] = y0v[i] + hh * (A31 * f1[i] + A32 * f2[i])
        f3[0] = s3[1]
        f3[1] = s3[2]
        f3[2] = rhs(p, t + C3 * hh, s3[0], s3[1], s3[2])
        for i in range(3):
            s4[i] = y0v[i] + hh * (A41 * f1[i] + A42 * f2[i] + A43 * f3[i])
        f4[0] = s4[1]
        f4[1] = s4[2]
        f4[2] = rhs(p, t + C4 * hh, s4[0], s4[1], s4[2])
        for i in range(3):
            s5[i] = y0v[i] + hh * (A51 * f1[i] + A52 * f2[i] + A53 * f3[i] + A54 * f4[i])
        f5[0] = s5[1]
        f5[1] = s5[2]
        f5[2] = rhs(p, t + C5 * hh, s5[0], s5[1], s5[2])
        for i in range(3):
            s6[i] = y0v[i] + hh * (A61 * f1[i] + A62 * f2[i] + A63 * f3[i] + A64 * f4[i]
                                   + A65 * f5[i])
        f6[0] = s6[1]
        f6[1] = s6[2]
        f6[2] = rhs(p, t + hh, s6[0], s6[1], s6[2])
        for i in range(3):
            yn[i] = y0v[i] + hh * (B1 * f1[i] + B3 * f3[i] + B4 * f4[i] + B5 * f5[i]
                                   + B6 * f6[i])
        k7 = rhs(p, t + hh, yn[0], yn[1], yn[2])
        f7[0] = yn[1]
        f7[1] = yn[2]
        f7[2] = k7
        err = 0.0
        for i in range(3):
            e = hh * (E1 * f1[i] + E3 * f3[i] + E4 * f4[i] + E5 * f5[i] + E6 * f6[i]
                      + E7 * f7[i])
            sc = atol + rtol * (fabs(y0v[i]) if fabs(y0v[i]) > fabs(yn[i]) else fabs(yn[i]))
            err += (e / sc) * (e / sc)
        err = sqrt(err / 3.0)
        if not isfinite(err):
            h = 0.25 * hh
            continue
        if err > 1.0:
            fac = 0.9 * pow(err, -0.2)
            h = hh * (fac if fac > 0.2 else 0.2)
            continue
        if patch and x != 0.0 and (yn[0] == 0.0 or (yn[0] > 0.0) != (x > 0.0)):
            tau = hh * x / (x - yn[0])
            if tau <= h_win:
                d_hint = tau
            else:
                h = tau - 0.5 * h_win
            continue

        tn = t + hh
        if ie < ne and <double>tev[ie] <= tn:
            for i in range(3):
                ydiff[i] = yn[i] - y0v[i]
                bspl[i] = hh * f1[i] - ydiff[i]
                r4[i] = ydiff[i] - hh * f7[i] - bspl[i]
                r5[i] = hh * (D1 * f1[i] + D3 * f3[i] + D4 * f4[i] + D5 * f5[i] + D6 * f6[i]
                              + D7 * f7[i])
            while ie < ne and <double>tev[ie] <= tn:
                th = (<double>tev[ie] - t) / hh
                samples.append((dense_value(th, y0v[0], ydiff[0], bspl[0], r4[0], r5[0]),
                                dense_value(th, y0v[1], ydiff[1], bspl[1], r4[1], r5[1]),
                                dense_value(th, y0v[2], ydiff[2], bspl[2], r4[2], r5[2])))
                ie += 1
        q1 += hh * (B1 * y0v[1] * y0v[1] + B3 * s3[1] * s3[1] + B4 * s4[1] * s4[1]
                    + B5 * s5[1] * s5[1] + B6 * s6[1] * s6[1])
        q2 += hh * (B1 * y0v[2] * y0v[2] + B3 * s3[2] * s3[2] + B4 * s4[2] * s4[2]
                    + B5 * s5[2] * s5[2] + B6 * s6[2] * s6[2])
        if not patch and x != 0.0 and (yn[0] == 0.0 or (yn[0] > 0.0) != (x > 0.0)):
            for i in range(3):
                ydiff[i] = yn[i] - y0v[i]
                bspl[i] = hh * f1[i] - ydiff[i]
                r4[i] = ydiff[i] - hh * f7[i] - bspl[i]
                r5[i] = hh * (D1 * f1[i] + D3 * f3[i] + D4 * f4[i] + D5 * f5[i] + D6 * f6[i]
                              + D7 * f7[i])
            za = 0.0
            zb = 1.0
            zfa = y0v[0]
            zfb = yn[0]
            if zfb != 0.0:
                for it in range(80):
                    zc = zb - zfb * (zb - za) / (zfb - zfa)
                    zfc = dense_value(zc, y0v[0], ydiff[0], bspl[0], r4[0], r5[0])
                    if zfc == 0.0 or fabs(zb - za) < 1e-15:
                        zb = zc
                        break
                    if (zfc > 0.0) != (zfb > 0.0):
                        za = zb
                        zfa = zfb
                    else:
                        zfa *= 0.5
                    zb = zc
                    zfb = zfc
                    if fabs(zb - za) * fabs(hh) < 1e-15 * (fabs(t) if fabs(t) > 1.0 else 1.0):
                        break
            tz = t + zb * hh
            st[1] = dense_value(zb, y0v[1], ydiff[1], bspl[1], r4[1], r5[1])
            st[2] = dense_value(zb, y0v[2], ydiff[2], bspl[2], r4[2], r5[2])
            zeros.append((tz, st[1], st[2]))
            if zero_dir == 0 or (st[1] > 0.0) == (zero_dir > 0):
                counted += 1
            if 0 <= max_zeros <= counted:
                return 1, tz, 0.0, st[1], st[2], q1, q2, zeros, samples, nsteps
        t = tn if tn < t_end else t_end
        x = yn[0]
        xp = yn[1]
        xpp = yn[2]
        k1 = k7
        if fabs(x) > escape:
            return 2, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
        fac = 0.9 * pow(err if err > 1e-10 else 1e-10, -0.17) * pow(err_old, 0.04)
        err_old = err if err > 1e-4 else 1e-4
        if fac > 5.0:
            fac = 5.0
        elif fac < 0.2:
            fac = 0.2
        h = hh * fac
    return 0, t, x, xp, xpp, q1, q2, zeros, samples, nsteps
