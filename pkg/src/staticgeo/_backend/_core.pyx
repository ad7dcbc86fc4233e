# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled integrator core.

Mirrors the pure-Python Dormand-Prince 5(4) driver step for step (same
tableau, controller constants and termination semantics) for the
parameterized geometry families described in ``kernels.py``.  The pure
backend is the reference implementation; keep the two aligned.
"""

import numpy as np

from libc.math cimport cos, fabs, pow, tan

# metric kinds
cdef int M_FLAT = 0
cdef int M_SCHW_EQ = 1
cdef int M_CONF_SEC2 = 2
# beta kinds
cdef int B_CONST = 0
cdef int B_POWQ = 1
cdef int B_SCHW = 2
cdef int B_SEC2 = 3
# domain kinds
cdef int D_ALL = 0
cdef int D_BALL = 1
cdef int D_COORD0_GT = 2
cdef int D_ABS0_LT = 3
cdef int D_SLIT = 4

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0
cdef double STEP_UNDERFLOW = 1e-14

# state dimension cap: slice dim <= 4 -> spacetime state <= 10


cdef struct Geom:
    int mk
    double mp[4]
    int bk
    double bp[4]
    int dk
    double dp[4]
    int n
    double sign        # -1 Lorentzian, +1 auxiliary Riemannian (spacetime mode)
    int mode           # 0 spacetime, 1 slice, 2 conformal slice (g_S / beta)
    double aux_thr_sq  # < 0: disabled
    double coord_guard


cdef bint dom_ok(Geom* g, double* x) noexcept nogil:
    cdef double r2
    cdef int i
    if g.dk == 0:      # ALL
        return True
    if g.dk == 1:      # BALL
        r2 = 0.0
        for i in range(g.n):
            r2 += x[i] * x[i]
        return r2 < g.dp[0] * g.dp[0]
    if g.dk == 2:      # COORD0_GT
        return x[0] > g.dp[0]
    if g.dk == 3:      # ABS0_LT
        return fabs(x[0]) < g.dp[0]
    if g.dk == 4:      # SLIT
        return not (x[0] == g.dp[0] and x[1] <= g.dp[1])
    return False


cdef bint seg_ok(Geom* g, double* xa, double* xb) noexcept nogil:
    cdef double t, yc
    if g.dk != 4:
        return True
    if (xa[0] - g.dp[0]) * (xb[0] - g.dp[0]) >= 0.0:
        return True
    t = (g.dp[0] - xa[0]) / (xb[0] - xa[0])
    yc = xa[1] + t * (xb[1] - xa[1])
    return yc > g.dp[1]


cdef void christoffel_contract(Geom* g, double* x, double* xd, double* out) noexcept nogil:
    # out[k] = Gamma^k_ij xd^i xd^j
    cdef double f, r, m
    cdef int k
    for k in range(g.n):
        out[k] = 0.0
    if g.mk == 0:
        return
    if g.mk == 1:
        m = g.mp[0]
        r = x[0]
        f = 1.0 - 2.0 * m / r
        out[0] = -(m / (r * r * f)) * xd[0] * xd[0] - r * f * xd[1] * xd[1]
        out[1] = 2.0 * (1.0 / r) * xd[0] * xd[1]
        return
    if g.mk == 2:
        out[0] = tan(x[0]) * xd[0] * xd[0]


cdef double beta_at(Geom* g, double* x) noexcept nogil:
    cdef double u, c
    cdef int i
    if g.bk == 0:
        return g.bp[0]
    if g.bk == 1:
        u = 1.0
        for i in range(g.n):
            u += x[i] * x[i]
        return pow(u, g.bp[0])
    if g.bk == 2:
        return 1.0 - 2.0 * g.bp[0] / x[0]
    if g.bk == 3:
        c = cos(x[0])
        return 1.0 / (c * c)
    return 1.0


cdef void beta_grad(Geom* g, double* x, double* db) noexcept nogil:
    cdef double u, c, p
    cdef int i
    for i in range(g.n):
        db[i] = 0.0
    if g.bk == 1:
        u = 1.0
        for i in range(g.n):
            u += x[i] * x[i]
        p = g.bp[0]
        for i in range(g.n):
            db[i] = 2.0 * p * x[i] * pow(u, p - 1.0)
    elif g.bk == 2:
        db[0] = 2.0 * g.bp[0] / (x[0] * x[0])
    elif g.bk == 3:
        c = cos(x[0])
        db[0] = 2.0 * tan(x[0]) / (c * c)


cdef void metric_solve(Geom* g, double* x, double* rhs_vec, double* out) noexcept nogil:
    # out = G^{-1} rhs for the (diagonal) kernel metrics
    cdef double f, c
    cdef int i
    if g.mk == 0:
        for i in range(g.n):
            out[i] = rhs_vec[i]
    elif g.mk == 1:
        f = 1.0 - 2.0 * g.mp[0] / x[0]
        out[0] = rhs_vec[0] * f
        out[1] = rhs_vec[1] / (x[0] * x[0])
    elif g.mk == 2:
        c = cos(x[0])
        out[0] = rhs_vec[0] * c * c


cdef double metric_quad(Geom* g, double* x, double* v) noexcept nogil:
    # v^T G v
    cdef double f, c, q
    cdef int i
    if g.mk == 0:
        q = 0.0
        for i in range(g.n):
            q += v[i] * v[i]
        return q
    if g.mk == 1:
        f = 1.0 - 2.0 * g.mp[0] / x[0]
        return v[0] * v[0] / f + x[0] * x[0] * v[1] * v[1]
    c = cos(x[0])
    return v[0] * v[0] / (c * c)


cdef void rhs(Geom* g, double* y, double* dy) noexcept nogil:
    cdef double x[4]
    cdef double xd[4]
    cdef double gam[4]
    cdef double db[4]
    cdef double gradup[4]
    cdef double dphi[4]
    cdef double td, b, dot, quad
    cdef int i, n
    n = g.n
    if g.mode == 0:
        for i in range(n):
            x[i] = y[1 + i]
            xd[i] = y[2 + n + i]
        td = y[1 + n]
        christoffel_contract(g, x, xd, gam)
        b = beta_at(g, x)
        beta_grad(g, x, db)
        metric_solve(g, x, db, gradup)
        dy[0] = td
        for i in range(n):
            dy[1 + i] = xd[i]
        dot = 0.0
        for i in range(n):
            dot += db[i] * xd[i]
        dy[1 + n] = 0.0 if td == 0.0 else -td * dot / b
        for i in range(n):
            dy[2 + n + i] = -gam[i] + g.sign * 0.5 * td * td * gradup[i]
        return
    for i in range(n):
        x[i] = y[i]
        xd[i] = y[n + i]
    christoffel_contract(g, x, xd, gam)
    for i in range(n):
        dy[i] = xd[i]
        dy[n + i] = -gam[i]
    if g.mode == 2:
        b = beta_at(g, x)
        beta_grad(g, x, db)
        for i in range(n):
            dphi[i] = -0.5 * db[i] / b
        dot = 0.0
        for i in range(n):
            dot += dphi[i] * xd[i]
        quad = metric_quad(g, x, xd)
        metric_solve(g, x, dphi, gradup)
        for i in range(n):
            dy[n + i] += -2.0 * dot * xd[i] + quad * gradup[i]


cdef bint pos_ok(Geom* g, double* y) noexcept nogil:
    if g.mode == 0:
        return dom_ok(g, y + 1)
    return dom_ok(g, y)


cdef bint blown(Geom* g, double* y) noexcept nogil:
    cdef double aux
    cdef double x[4]
    cdef double xd[4]
    cdef int i, d
    if g.mode == 0:
        if g.aux_thr_sq < 0.0:
            return False
        for i in range(g.n):
            x[i] = y[1 + i]
            xd[i] = y[2 + g.n + i]
        aux = beta_at(g, x) * y[1 + g.n] * y[1 + g.n] + metric_quad(g, x, xd)
        return aux > g.aux_thr_sq
    d = 2 * g.n
    for i in range(d):
        if fabs(y[i]) > g.coord_guard:
            return True
    return False


cdef bint near_boundary(Geom* g, double* y) noexcept nogil:
    # probe the spatial position along the spatial velocity
    cdef double vn = 0.0
    cdef double probe[4]
    cdef double delta
    cdef double* x
    cdef double* xd
    cdef int i, j, n
    n = g.n
    if g.mode == 0:
        x = y + 1
        xd = y + 2 + n
    else:
        x = y
        xd = y + n
    for i in range(n):
        if fabs(xd[i]) > vn:
            vn = fabs(xd[i])
    if vn == 0.0:
        return False
    delta = 1e-12
    for j in range(3):
        for i in range(n):
            probe[i] = x[i] + (delta / vn) * xd[i]
        if not dom_ok(g, probe):
            return True
        delta *= 1e3
    return False


cdef bint escaping(Geom* g, double* y, int d) noexcept nogil:
    cdef int i
    for i in range(d):
        if fabs(y[i]) > 1e8:
            return True
    return False


cdef double err_norm(double* err, double* y0, double* y1, double rtol,
                     double atol, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef double sc, q, a0, a1
    cdef int i
    for i in range(d):
        a0 = fabs(y0[i])
        a1 = fabs(y1[i])
        sc = atol + rtol * (a0 if a0 > a1 else a1)
        q = err[i] / sc
        acc += q * q
    return (acc / d) ** 0.5


cdef double initial_step(Geom* g, double* y0, double* f0, double s_span,
                         double rtol, double atol, int d):
    cdef double probe[10]
    cdef double f1[10]
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0
    cdef double sc, h0, h1
    cdef int i
    for i in range(d):
        sc = atol + rtol * fabs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = (d0 / d) ** 0.5
    d1 = (d1 / d) ** 0.5
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if h0 > s_span:
        h0 = s_span
    for i in range(d):
        probe[i] = y0[i] + h0 * f0[i]
    ok = True
    for i in range(d):
        if probe[i] != probe[i]:
            ok = False
    if ok:
        ok = pos_ok(g, probe)
    if not ok:
        h1 = h0 * 1e-3
        if h1 > s_span:
            h1 = s_span
        if h1 < STEP_UNDERFLOW * 10.0:
            h1 = STEP_UNDERFLOW * 10.0
        return h1
    rhs(g, probe, f1)
    for i in range(d):
        sc = atol + rtol * fabs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = (d2 / d) ** 0.5 / h0
    cdef double dm = d1 if d1 > d2 else d2
    if dm <= 1e-15:
        h1 = h0 * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = (0.01 / dm) ** 0.2
    h0 = 100.0 * h0
    if h1 < h0:
        h0 = h1
    if h0 > s_span:
        h0 = s_span
    return h0


cdef _drive(Geom* g, double[::1] y0, double s0, double s_max, double rtol,
            double atol, long max_steps, double max_step):
    """Shared driver. Returns (s_arr, y_arr, code, s_exit, n_acc, n_rej).

    Codes: 0 reached_s_max, 1 left_domain, 2 blow_up, 3 stiffness
    (underflow), 4 step budget exceeded.
    """
    cdef int d = y0.shape[0]
    cdef int i, j, st
    cdef double s = s0
    cdef double h, enorm, factor, s_exit
    cdef long n_acc = 0, n_rej = 0
    cdef bint domain_hit = False, bad, crossed
    cdef double y[10]
    cdef double ynew[10]
    cdef double yi[10]
    cdef double err[10]
    cdef double k[7][10]

    # tableau
    cdef double A2[1]
    cdef double A3[2]
    cdef double A4[3]
    cdef double A5[4]
    cdef double A6[5]
    cdef double B5[6]
    cdef double EC[7]
    A2[0] = 1.0 / 5.0
    A3[0] = 3.0 / 40.0; A3[1] = 9.0 / 40.0
    A4[0] = 44.0 / 45.0; A4[1] = -56.0 / 15.0; A4[2] = 32.0 / 9.0
    A5[0] = 19372.0 / 6561.0; A5[1] = -25360.0 / 2187.0
    A5[2] = 64448.0 / 6561.0; A5[3] = -212.0 / 729.0
    A6[0] = 9017.0 / 3168.0; A6[1] = -355.0 / 33.0; A6[2] = 46732.0 / 5247.0
    A6[3] = 49.0 / 176.0; A6[4] = -5103.0 / 18656.0
    B5[0] = 35.0 / 384.0; B5[1] = 0.0; B5[2] = 500.0 / 1113.0
    B5[3] = 125.0 / 192.0; B5[4] = -2187.0 / 6784.0; B5[5] = 11.0 / 84.0
    EC[0] = 35.0 / 384.0 - 5179.0 / 57600.0
    EC[1] = 0.0
    EC[2] = 500.0 / 1113.0 - 7571.0 / 16695.0
    EC[3] = 125.0 / 192.0 - 393.0 / 640.0
    EC[4] = -2187.0 / 6784.0 + 92097.0 / 339200.0
    EC[5] = 11.0 / 84.0 - 187.0 / 2100.0
    EC[6] = -1.0 / 40.0

    for i in range(d):
        y[i] = y0[i]
    if not pos_ok(g, y):
        raise ValueError("initial state outside the chart domain")

    cdef long cap = 4096
    s_buf = np.empty(cap, dtype=np.float64)
    y_buf = np.empty((cap, d), dtype=np.float64)
    cdef double[::1] s_mv = s_buf
    cdef double[:, ::1] y_mv = y_buf
    cdef long m = 0

    rhs(g, y, k[0])
    s_mv[0] = s
    for i in range(d):
        y_mv[0, i] = y[i]
    m = 1

    h = initial_step(g, y, k[0], s_max - s, rtol, atol, d)
    if h > max_step:
        h = max_step
    cdef int code = 0
    s_exit = float("nan")

    while s < s_max:
        if n_acc + n_rej > max_steps:
            code = 4
            break
        if h > s_max - s:
            h = s_max - s
        if h < STEP_UNDERFLOW * (1.0 if fabs(s) < 1.0 else fabs(s)):
            if domain_hit or near_boundary(g, y):
                code = 1
                s_exit = s
            elif escaping(g, y, d):
                code = 2
                s_exit = s
            else:
                code = 3
            break

        bad = False
        # stage 2
        for i in range(d):
            yi[i] = y[i] + h * A2[0] * k[0][i]
        if not pos_ok(g, yi):
            bad = True
        if not bad:
            rhs(g, yi, k[1])
            for i in range(d):
                yi[i] = y[i] + h * (A3[0] * k[0][i] + A3[1] * k[1][i])
            if not pos_ok(g, yi):
                bad = True
        if not bad:
            rhs(g, yi, k[2])
            for i in range(d):
                yi[i] = y[i] + h * (A4[0] * k[0][i] + A4[1] * k[1][i] + A4[2] * k[2][i])
            if not pos_ok(g, yi):
                bad = True
        if not bad:
            rhs(g, yi, k[3])
            for i in range(d):
                yi[i] = y[i] + h * (A5[0] * k[0][i] + A5[1] * k[1][i]
                                    + A5[2] * k[2][i] + A5[3] * k[3][i])
            if not pos_ok(g, yi):
                bad = True
        if not bad:
            rhs(g, yi, k[4])
            for i in range(d):
                yi[i] = y[i] + h * (A6[0] * k[0][i] + A6[1] * k[1][i] + A6[2] * k[2][i]
                                    + A6[3] * k[3][i] + A6[4] * k[4][i])
            if not pos_ok(g, yi):
                bad = True
        if not bad:
            rhs(g, yi, k[5])
            for i in range(d):
                ynew[i] = y[i] + h * (B5[0] * k[0][i] + B5[2] * k[2][i] + B5[3] * k[3][i]
                                      + B5[4] * k[4][i] + B5[5] * k[5][i])
            ok = True
            for i in range(d):
                if ynew[i] != ynew[i]:
                    ok = False
            if not ok or not pos_ok(g, ynew):
                bad = True
        if bad:
            n_rej += 1
            domain_hit = True
            h *= 0.5
            continue

        rhs(g, ynew, k[6])
        for i in range(d):
            err[i] = h * (EC[0] * k[0][i] + EC[2] * k[2][i] + EC[3] * k[3][i]
                          + EC[4] * k[4][i] + EC[5] * k[5][i] + EC[6] * k[6][i])
        enorm = err_norm(err, y, ynew, rtol, atol, d)
        if enorm != enorm or enorm > 1.0:
            n_rej += 1
            domain_hit = False
            if enorm != enorm:
                factor = MIN_FACTOR
            else:
                factor = SAFETY * enorm ** -0.2
                if factor < MIN_FACTOR:
                    factor = MIN_FACTOR
            h *= factor
            continue

        if g.mode == 0:
            crossed = not seg_ok(g, y + 1, ynew + 1)
        else:
            crossed = not seg_ok(g, y, ynew)
        s += h
        n_acc += 1
        domain_hit = False
        for i in range(d):
            y[i] = ynew[i]
            k[0][i] = k[6][i]

        if m >= cap:
            cap *= 2
            s_buf2 = np.empty(cap, dtype=np.float64)
            y_buf2 = np.empty((cap, d), dtype=np.float64)
            s_buf2[:m] = s_buf[:m]
            y_buf2[:m] = y_buf[:m]
            s_buf = s_buf2
            y_buf = y_buf2
            s_mv = s_buf
            y_mv = y_buf
        s_mv[m] = s
        for i in range(d):
            y_mv[m, i] = y[i]
        m += 1

        if crossed:
            code = 1
            s_exit = s
            break
        if blown(g, y):
            code = 2
            s_exit = s
            break
        if enorm == 0.0:
            factor = MAX_FACTOR
        else:
            factor = SAFETY * enorm ** -0.2
            if factor > MAX_FACTOR:
                factor = MAX_FACTOR
            elif factor < MIN_FACTOR:
                factor = MIN_FACTOR
        h *= factor
        if h > max_step:
            h = max_step

    return (s_buf[:m].copy(), y_buf[:m].copy(), code, s_exit, n_acc, n_rej)


cdef void fill_params(double* dst, object params):
    cdef int i
    for i in range(4):
        dst[i] = 0.0
    for i in range(min(4, len(params))):
        dst[i] = float(params[i])


def integrate_spacetime_k(int mk, object mpar, int bk, object bpar, int dk,
                          object dpar, int n, double sign, double[::1] y0,
                          double s0, double s_max, double rtol, double atol,
                          double aux_thr_sq, long max_steps, double max_step):
    cdef Geom g
    if n > 4:
        raise ValueError("kernel geometries support dimension <= 4")
    g.mk = mk; g.bk = bk; g.dk = dk
    fill_params(g.mp, mpar)
    fill_params(g.bp, bpar)
    fill_params(g.dp, dpar)
    g.n = n
    g.sign = sign
    g.mode = 0
    g.aux_thr_sq = aux_thr_sq
    g.coord_guard = 1e150
    return _drive(&g, y0, s0, s_max, rtol, atol, max_steps, max_step)


def integrate_slice_k(int mk, object mpar, int dk, object dpar, int n,
                      double[::1] y0, double s0, double s_max, double rtol,
                      double atol, double coord_guard, int conf_bk,
                      object conf_bpar, long max_steps, double max_step):
    cdef Geom g
    if n > 4:
        raise ValueError("kernel geometries support dimension <= 4")
    g.mk = mk; g.dk = dk
    fill_params(g.mp, mpar)
    fill_params(g.dp, dpar)
    g.n = n
    g.sign = 1.0
    g.aux_thr_sq = -1.0
    g.coord_guard = coord_guard
    if conf_bk >= 0:
        g.mode = 2
        g.bk = conf_bk
        fill_params(g.bp, conf_bpar)
    else:
        g.mode = 1
        g.bk = 0
        fill_params(g.bp, (1.0,))
    return _drive(&g, y0, s0, s_max, rtol, atol, max_steps, max_step)
