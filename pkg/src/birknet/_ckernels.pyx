# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contract and status codes as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, tanh, log, sqrt, fabs, pow, isfinite, NAN

cnp.import_array()

cdef enum:
    MAX_STACK = 64

cdef enum:
    OK = 0
    DOMAIN = 1
    NONFINITE = 2
    QUADFAIL = 3
    SINGULAR = 4
    BLOWUP = 5

cdef double EPS = 2.220446049250313e-16
cdef long MAX_EVALS = 1000000
cdef double BLOWUP_LIMIT = 1e12
cdef double PIVOT_TOL = 1e-12


cdef int run_prog(const int* code, int start, int end, const double* consts,
                  double x, double* out_f, double* out_d) noexcept nogil:
    cdef double vs[MAX_STACK]
    cdef double ds[MAX_STACK]
    cdef int sp = 0
    cdef int pc = start
    cdef int op, arg
    cdef double a, da, b, db, q, v, d, e, t, s
    while pc < end:
        op = code[pc]
        arg = code[pc + 1]
        pc += 2
        if op == 0:
            vs[sp] = consts[arg]
            ds[sp] = 0.0
            sp += 1
        elif op == 1:
            vs[sp] = x
            ds[sp] = 1.0
            sp += 1
        elif op == 2:
            vs[sp - 1] = -vs[sp - 1]
            ds[sp - 1] = -ds[sp - 1]
        elif op <= 6:
            sp -= 1
            a = vs[sp - 1]
            da = ds[sp - 1]
            b = vs[sp]
            db = ds[sp]
            if op == 3:
                vs[sp - 1] = a + b
                ds[sp - 1] = da + db
            elif op == 4:
                vs[sp - 1] = a - b
                ds[sp - 1] = da - db
            elif op == 5:
                vs[sp - 1] = a * b
                ds[sp - 1] = a * db + da * b
            else:
                if b == 0.0:
                    return DOMAIN
                q = a / b
                vs[sp - 1] = q
                ds[sp - 1] = (da - q * db) / b
        elif op == 7:
            v = vs[sp - 1]
            d = ds[sp - 1]
            if arg == 0:
                vs[sp - 1] = 1.0
                ds[sp - 1] = 0.0
            else:
                if arg < 0 and v == 0.0:
                    return DOMAIN
                vs[sp - 1] = pow(v, <double>arg)
                ds[sp - 1] = arg * pow(v, <double>(arg - 1)) * d
        else:
            v = vs[sp - 1]
            d = ds[sp - 1]
            if op == 8:
                vs[sp - 1] = sin(v)
                ds[sp - 1] = cos(v) * d
            elif op == 9:
                vs[sp - 1] = cos(v)
                ds[sp - 1] = -sin(v) * d
            elif op == 10:
                e = exp(v)
                vs[sp - 1] = e
                ds[sp - 1] = e * d
            elif op == 11:
                t = tanh(v)
                vs[sp - 1] = t
                ds[sp - 1] = (1.0 - t * t) * d
            elif op == 12:
                if v <= 0.0:
                    return DOMAIN
                vs[sp - 1] = log(v)
                ds[sp - 1] = d / v
            else:
                if v < 0.0:
                    return DOMAIN
                if v == 0.0:
                    if d != 0.0:
                        return DOMAIN
                    vs[sp - 1] = 0.0
                    ds[sp - 1] = 0.0
                else:
                    s = sqrt(v)
                    vs[sp - 1] = s
                    ds[sp - 1] = d / (2.0 * s)
    out_f[0] = vs[0]
    out_d[0] = ds[0]
    if not (isfinite(vs[0]) and isfinite(ds[0])):
        return NONFINITE
    return OK


def eval_program(const int[::1] code, const double[::1] consts, int start, int end, double x):
    cdef double f = 0.0, d = 0.0
    cdef int st = run_prog(&code[0], start, end, &consts[0] if consts.shape[0] else NULL, x, &f, &d)
    if st == DOMAIN:
        return st, 0.0, 0.0
    return st, f, d


cdef struct QuadCtx:
    const int* code
    const double* consts
    int start
    int end
    int weighted
    int maxdepth
    long evals
    int status


cdef double qf(QuadCtx* c, double u) noexcept nogil:
    cdef double v = 0.0, d = 0.0
    cdef int st
    c.evals += 1
    st = run_prog(c.code, c.start, c.end, c.consts, u, &v, &d)
    if st != OK:
        c.status = st
        return 0.0
    if c.weighted:
        return u * v
    return v


cdef double qstep(QuadCtx* c, double a, double b, double fa, double fm, double fb,
                  double whole, double tol, int depth) noexcept nogil:
    cdef double m = 0.5 * (a + b)
    cdef double lm = 0.5 * (a + m)
    cdef double rm = 0.5 * (m + b)
    cdef double flm = qf(c, lm)
    cdef double frm = qf(c, rm)
    cdef double left, right, delta, floor_
    if c.status != OK:
        return 0.0
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    floor_ = 32.0 * EPS * (fabs(left) + fabs(right))
    if fabs(delta) <= 15.0 * tol or fabs(delta) <= floor_ or lm == a or rm == b:
        return left + right + delta / 15.0
    if depth >= c.maxdepth or c.evals > MAX_EVALS:
        c.status = QUADFAIL
        return 0.0
    return (qstep(c, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + qstep(c, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))


cdef int quad(const int* code, const double* consts, int start, int end,
              double a, double b, int weighted, double tol, int maxdepth,
              double* out) noexcept nogil:
    cdef QuadCtx c
    cdef double fa, fb, fm, m, whole
    out[0] = 0.0
    if a == b:
        return OK
    c.code = code
    c.consts = consts
    c.start = start
    c.end = end
    c.weighted = weighted
    c.maxdepth = maxdepth
    c.evals = 0
    c.status = OK
    fa = qf(&c, a)
    fb = qf(&c, b)
    m = 0.5 * (a + b)
    fm = qf(&c, m)
    if c.status != OK:
        return c.status
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    out[0] = qstep(&c, a, b, fa, fm, fb, whole, tol, 0)
    return c.status


def quad_program(const int[::1] code, const double[::1] consts, int start, int end,
                 double a, double b, int weighted, double tol, int maxdepth):
    cdef double value = 0.0
    cdef int st = quad(&code[0], &consts[0] if consts.shape[0] else NULL, start, end,
                       a, b, weighted, tol, maxdepth, &value)
    if st != OK:
        return st, 0.0
    return st, value


cdef struct Sys:
    int b
    int m
    const double* N
    const double* K
    const int* kind
    const int* code
    const int* starts
    const double* consts
    const double* shift
    double tol
    int maxdepth
    double* mass
    double* force


cdef int solve(double* a, double* rhs, double* x, int n) noexcept nogil:
    cdef double scale = 0.0, piv, fac, s, tmp
    cdef int r, c, k, p
    for r in range(n * n):
        if fabs(a[r]) > scale:
            scale = fabs(a[r])
    if scale == 0.0:
        return SINGULAR
    for c in range(n):
        p = c
        for r in range(c + 1, n):
            if fabs(a[r * n + c]) > fabs(a[p * n + c]):
                p = r
        if fabs(a[p * n + c]) <= PIVOT_TOL * scale:
            return SINGULAR
        if p != c:
            for k in range(n):
                tmp = a[c * n + k]
                a[c * n + k] = a[p * n + k]
                a[p * n + k] = tmp
            tmp = rhs[c]
            rhs[c] = rhs[p]
            rhs[p] = tmp
        piv = a[c * n + c]
        for r in range(c + 1, n):
            fac = a[r * n + c] / piv
            if fac != 0.0:
                for k in range(c, n):
                    a[r * n + k] -= fac * a[c * n + k]
                rhs[r] -= fac * rhs[c]
    for r in range(n - 1, -1, -1):
        s = rhs[r]
        for k in range(r + 1, n):
            s -= a[r * n + k] * x[k]
        x[r] = s / a[r * n + r]
    return OK


cdef int accel(Sys* S, const double* q, const double* qd, double* qdd) noexcept nogil:
    cdef int m = S.m
    cdef int l, i, j, st
    cdef double arg, f, d, w
    cdef const double* row
    for i in range(m * m):
        S.mass[i] = 0.0
    for i in range(m):
        S.force[i] = 0.0
    for l in range(S.b):
        row = S.N + l * m
        if S.kind[l] == 2:
            arg = S.K[l]
            for j in range(m):
                arg += row[j] * q[j]
        else:
            arg = 0.0
            for j in range(m):
                arg += row[j] * qd[j]
        st = run_prog(S.code, S.starts[l], S.starts[l + 1], S.consts, arg, &f, &d)
        if st != OK:
            return st
        if S.kind[l] == 1:
            for i in range(m):
                if row[i] != 0.0:
                    w = f * row[i]
                    for j in range(m):
                        S.mass[i * m + j] += w * row[j]
        else:
            for j in range(m):
                S.force[j] += row[j] * f
    for j in range(m):
        S.force[j] = -S.force[j]
    return solve(S.mass, S.force, qdd, m)


cdef int observe(Sys* S, const double* q, const double* qd, const double* qdd,
                 double* energy, double* rate, double* power) noexcept nogil:
    cdef int m = S.m
    cdef int l, j, st, kind
    cdef double s, sdot, sig, sigdot, f, d, val
    cdef const double* row
    energy[0] = 0.0
    rate[0] = 0.0
    power[0] = 0.0
    for j in range(m):
        energy[0] += S.shift[j] * q[j]
        rate[0] += S.shift[j] * qd[j]
        power[0] -= S.shift[j] * qd[j]
    for l in range(S.b):
        row = S.N + l * m
        kind = S.kind[l]
        if kind == 2:
            s = S.K[l]
            sdot = 0.0
            for j in range(m):
                s += row[j] * q[j]
                sdot += row[j] * qd[j]
            st = run_prog(S.code, S.starts[l], S.starts[l + 1], S.consts, s, &f, &d)
            if st != OK:
                return st
            st = quad(S.code, S.consts, S.starts[l], S.starts[l + 1], S.K[l], s, 0,
                      S.tol, S.maxdepth, &val)
            if st != OK:
                return st
            energy[0] += val
            rate[0] += f * sdot
        else:
            sig = 0.0
            sigdot = 0.0
            for j in range(m):
                sig += row[j] * qd[j]
                sigdot += row[j] * qdd[j]
            st = run_prog(S.code, S.starts[l], S.starts[l + 1], S.consts, sig, &f, &d)
            if st != OK:
                return st
            if kind == 1:
                st = quad(S.code, S.consts, S.starts[l], S.starts[l + 1], 0.0, sig, 1,
                          S.tol, S.maxdepth, &val)
                if st != OK:
                    return st
                energy[0] += val
                rate[0] += f * sig * sigdot
            else:
                power[0] += sig * f
    return OK


cdef Sys make_sys(const double[:, ::1] N, const double[::1] K, const int[::1] kind,
                  const int[::1] code, const int[::1] starts, const double[::1] consts,
                  const double[::1] shift, double tol, int maxdepth,
                  double[::1] mass, double[::1] force):
    cdef Sys S
    S.b = N.shape[0]
    S.m = N.shape[1]
    S.N = &N[0, 0]
    S.K = &K[0]
    S.kind = &kind[0]
    S.code = &code[0]
    S.starts = &starts[0]
    S.consts = &consts[0] if consts.shape[0] else NULL
    S.shift = &shift[0]
    S.tol = tol
    S.maxdepth = maxdepth
    S.mass = &mass[0]
    S.force = &force[0]
    return S


def accel_state(const double[:, ::1] N, const double[::1] K, const int[::1] kind,
                const int[::1] code, const int[::1] starts, const double[::1] consts,
                const double[::1] q, const double[::1] qd):
    cdef int m = N.shape[1]
    cdef double[::1] mass = np.zeros(m * m)
    cdef double[::1] force = np.zeros(m)
    cdef double[::1] shift = np.zeros(m)
    out = np.zeros(m)
    cdef double[::1] qdd = out
    cdef Sys S = make_sys(N, K, kind, code, starts, consts, shift, 1e-12, 40, mass, force)
    cdef int st = accel(&S, &q[0], &qd[0], &qdd[0])
    if st != OK:
        return st, None
    return st, out


def rk4(const double[:, ::1] N, const double[::1] K, const int[::1] kind,
        const int[::1] code, const int[::1] starts, const double[::1] consts,
        const double[::1] shift, q0, qd0, double dt, long nsteps, double last_dt,
        long stride, double tol=1e-12, int maxdepth=40):
    cdef int m = N.shape[1]
    cdef long cap = nsteps // stride + 2
    cdef double[::1] mass = np.zeros(m * m)
    cdef double[::1] force = np.zeros(m)
    cdef Sys S = make_sys(N, K, kind, code, starts, consts, shift, tol, maxdepth, mass, force)

    times_a = np.empty(cap)
    Q_a = np.empty((cap, m))
    QD_a = np.empty((cap, m))
    E_a = np.empty(cap)
    R_a = np.empty(cap)
    P_a = np.empty(cap)
    cdef double[::1] times = times_a
    cdef double[:, ::1] Q = Q_a
    cdef double[:, ::1] QD = QD_a
    cdef double[::1] E = E_a
    cdef double[::1] R = R_a
    cdef double[::1] P = P_a

    work_a = np.zeros((12, m))
    cdef double[:, ::1] w = work_a
    cdef double* q = &w[0, 0]
    cdef double* qd = &w[1, 0]
    cdef double* a1 = &w[2, 0]
    cdef double* a2 = &w[3, 0]
    cdef double* a3 = &w[4, 0]
    cdef double* a4 = &w[5, 0]
    cdef double* q2 = &w[6, 0]
    cdef double* v2 = &w[7, 0]
    cdef double* q3 = &w[8, 0]
    cdef double* v3 = &w[9, 0]
    cdef double* q4 = &w[10, 0]
    cdef double* v4 = &w[11, 0]

    cdef int j, st
    cdef long step, nrec = 0
    cdef int status = OK
    cdef double fail_time = NAN
    cdef double t = 0.0, h, hh, h6, big, e, r, p

    for j in range(m):
        q[j] = q0[j]
        qd[j] = qd0[j]

    with nogil:
        st = accel(&S, q, qd, a1)
        if st == OK:
            st = observe(&S, q, qd, a1, &e, &r, &p)
        if st != OK:
            status = st
            fail_time = 0.0
        else:
            times[0] = t
            for j in range(m):
                Q[0, j] = q[j]
                QD[0, j] = qd[j]
            E[0] = e
            R[0] = r
            P[0] = p
            nrec = 1
            for step in range(1, nsteps + 1):
                h = last_dt if step == nsteps else dt
                hh = 0.5 * h
                for j in range(m):
                    q2[j] = q[j] + hh * qd[j]
                    v2[j] = qd[j] + hh * a1[j]
                st = accel(&S, q2, v2, a2)
                if st == OK:
                    for j in range(m):
                        q3[j] = q[j] + hh * v2[j]
                        v3[j] = qd[j] + hh * a2[j]
                    st = accel(&S, q3, v3, a3)
                if st == OK:
                    for j in range(m):
                        q4[j] = q[j] + h * v3[j]
                        v4[j] = qd[j] + h * a3[j]
                    st = accel(&S, q4, v4, a4)
                if st != OK:
                    status = st
                    fail_time = t
                    break
                h6 = h / 6.0
                for j in range(m):
                    q[j] = q[j] + h6 * (qd[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j])
                    qd[j] = qd[j] + h6 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j])
                if step < nsteps:
                    t = dt * step
                else:
                    t = dt * (nsteps - 1) + last_dt
                big = 0.0
                for j in range(m):
                    if not (fabs(q[j]) <= BLOWUP_LIMIT and fabs(qd[j]) <= BLOWUP_LIMIT):
                        big = NAN
                        break
                if not big <= BLOWUP_LIMIT:
                    status = BLOWUP
                    fail_time = t
                    break
                st = accel(&S, q, qd, a1)
                if st != OK:
                    status = st
                    fail_time = t
                    break
                if step % stride == 0 or step == nsteps:
                    st = observe(&S, q, qd, a1, &e, &r, &p)
                    if st != OK:
                        status = st
                        fail_time = t
                        break
                    times[nrec] = t
                    for j in range(m):
                        Q[nrec, j] = q[j]
                        QD[nrec, j] = qd[j]
                    E[nrec] = e
                    R[nrec] = r
                    P[nrec] = p
                    nrec += 1

    return (status, fail_time, times_a[:nrec], Q_a[:nrec], QD_a[:nrec],
            E_a[:nrec], R_a[:nrec], P_a[:nrec])
