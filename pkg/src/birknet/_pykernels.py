"""Pure-Python kernels, mirrored line for line by ``_ckernels.pyx``.

Status codes shared by both backends:

    0 ok, 1 domain error, 2 non-finite value, 3 quadrature failure,
    4 singular mass matrix, 5 state blow-up
"""

import math

import numpy as np

OK = 0
DOMAIN = 1
NONFINITE = 2
QUADFAIL = 3
SINGULAR = 4
BLOWUP = 5

MAX_STACK = 64
EPS = 2.220446049250313e-16
MAX_EVALS = 1_000_000
BLOWUP_LIMIT = 1e12
PIVOT_TOL = 1e-12


def _run(code, consts, start, end, x):
    vs = [0.0] * MAX_STACK
    ds = [0.0] * MAX_STACK
    sp = 0
    pc = start
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
            a, da = vs[sp - 1], ds[sp - 1]
            b, db = vs[sp], ds[sp]
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
                    return DOMAIN, 0.0, 0.0
                q = a / b
                vs[sp - 1] = q
                ds[sp - 1] = (da - q * db) / b
        elif op == 7:
            v, d = vs[sp - 1], ds[sp - 1]
            if arg == 0:
                vs[sp - 1] = 1.0
                ds[sp - 1] = 0.0
            else:
                if arg < 0 and v == 0.0:
                    return DOMAIN, 0.0, 0.0
                vs[sp - 1] = v**arg
                ds[sp - 1] = arg * v ** (arg - 1) * d
        else:
            v, d = vs[sp - 1], ds[sp - 1]
            if op == 8:
                vs[sp - 1] = math.sin(v)
                ds[sp - 1] = math.cos(v) * d
            elif op == 9:
                vs[sp - 1] = math.cos(v)
                ds[sp - 1] = -math.sin(v) * d
            elif op == 10:
                e = math.exp(v)
                vs[sp - 1] = e
                ds[sp - 1] = e * d
            elif op == 11:
                t = math.tanh(v)
                vs[sp - 1] = t
                ds[sp - 1] = (1.0 - t * t) * d
            elif op == 12:
                if v <= 0.0:
                    return DOMAIN, 0.0, 0.0
                vs[sp - 1] = math.log(v)
                ds[sp - 1] = d / v
            else:
                if v < 0.0:
                    return DOMAIN, 0.0, 0.0
                if v == 0.0:
                    if d != 0.0:
                        return DOMAIN, 0.0, 0.0
                    vs[sp - 1] = 0.0
                    ds[sp - 1] = 0.0
                else:
                    s = math.sqrt(v)
                    vs[sp - 1] = s
                    ds[sp - 1] = d / (2.0 * s)
    f, df = vs[0], ds[0]
    if not (math.isfinite(f) and math.isfinite(df)):
        return NONFINITE, f, df
    return OK, f, df


def eval_program(code, consts, start, end, x):
    """Evaluate one program at ``x``; returns ``(status, f, f')``."""
    try:
        return _run(code, consts, start, end, float(x))
    except (OverflowError, ZeroDivisionError):
        return NONFINITE, math.nan, math.nan


class _Quad:
    def __init__(self, code, consts, start, end, weighted, maxdepth):
        self.code = code
        self.consts = consts
        self.start = start
        self.end = end
        self.weighted = weighted
        self.maxdepth = maxdepth
        self.evals = 0
        self.status = OK

    def f(self, u):
        self.evals += 1
        st, v, _ = eval_program(self.code, self.consts, self.start, self.end, u)
        if st != OK:
            self.status = st
            return 0.0
        return u * v if self.weighted else v

    def step(self, a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = self.f(lm)
        frm = self.f(rm)
        if self.status != OK:
            return 0.0
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        floor = 32.0 * EPS * (abs(left) + abs(right))
        if abs(delta) <= 15.0 * tol or abs(delta) <= floor or lm == a or rm == b:
            return left + right + delta / 15.0
        if depth >= self.maxdepth or self.evals > MAX_EVALS:
            self.status = QUADFAIL
            return 0.0
        return self.step(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + self.step(
            m, b, fm, frm, fb, right, 0.5 * tol, depth + 1
        )


def quad_program(code, consts, start, end, a, b, weighted, tol, maxdepth):
    """Adaptive Simpson integral of f(u) (or u*f(u) if ``weighted``) on [a, b]."""
    a = float(a)
    b = float(b)
    if a == b:
        return OK, 0.0
    q = _Quad(code, consts, start, end, weighted, maxdepth)
    fa = q.f(a)
    fb = q.f(b)
    m = 0.5 * (a + b)
    fm = q.f(m)
    if q.status != OK:
        return q.status, 0.0
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    value = q.step(a, b, fa, fm, fb, whole, tol, 0)
    return q.status, value


class _System:
    def __init__(self, N, K, kind, code, starts, consts, shift, tol, maxdepth):
        self.N = [list(map(float, row)) for row in N]
        self.K = list(map(float, K))
        self.kind = list(map(int, kind))
        self.code = list(map(int, code))
        self.starts = list(map(int, starts))
        self.consts = list(map(float, consts))
        self.shift = list(map(float, shift))
        self.b = len(self.K)
        self.m = len(self.shift)
        self.tol = tol
        self.maxdepth = maxdepth

    def prog(self, l, x):
        return eval_program(self.code, self.consts, self.starts[l], self.starts[l + 1], x)

    def accel(self, q, qd):
        m = self.m
        mass = [[0.0] * m for _ in range(m)]
        force = [0.0] * m
        for l in range(self.b):
            row = self.N[l]
            if self.kind[l] == 2:
                arg = self.K[l]
                for j in range(m):
                    arg += row[j] * q[j]
            else:
                arg = 0.0
                for j in range(m):
                    arg += row[j] * qd[j]
            st, f, _ = self.prog(l, arg)
            if st != OK:
                return st, None
            if self.kind[l] == 1:
                for i in range(m):
                    if row[i] != 0.0:
                        w = f * row[i]
                        for j in range(m):
                            mass[i][j] += w * row[j]
            else:
                for j in range(m):
                    force[j] += row[j] * f
        return _solve(mass, [-v for v in force])

    def observe(self, q, qd, qdd):
        """Energy, its rate along the field, and the dissipated power."""
        m = self.m
        energy = 0.0
        rate = 0.0
        power = 0.0
        for j in range(m):
            energy += self.shift[j] * q[j]
            rate += self.shift[j] * qd[j]
            power -= self.shift[j] * qd[j]
        for l in range(self.b):
            row = self.N[l]
            start, end = self.starts[l], self.starts[l + 1]
            kind = self.kind[l]
            if kind == 2:
                s = self.K[l]
                sdot = 0.0
                for j in range(m):
                    s += row[j] * q[j]
                    sdot += row[j] * qd[j]
                st, f, _ = self.prog(l, s)
                if st != OK:
                    return st, 0.0, 0.0, 0.0
                st, val = quad_program(
                    self.code, self.consts, start, end, self.K[l], s, 0, self.tol, self.maxdepth
                )
                if st != OK:
                    return st, 0.0, 0.0, 0.0
                energy += val
                rate += f * sdot
            else:
                sig = 0.0
                sigdot = 0.0
                for j in range(m):
                    sig += row[j] * qd[j]
                    sigdot += row[j] * qdd[j]
                st, f, _ = self.prog(l, sig)
                if st != OK:
                    return st, 0.0, 0.0, 0.0
                if kind == 1:
                    st, val = quad_program(
                        self.code, self.consts, start, end, 0.0, sig, 1, self.tol, self.maxdepth
                    )
                    if st != OK:
                        return st, 0.0, 0.0, 0.0
                    energy += val
                    rate += f * sig * sigdot
                else:
                    power += sig * f
        return OK, energy, rate, power


def _solve(a, rhs):
    n = len(rhs)
    scale = 0.0
    for row in a:
        for v in row:
            scale = max(scale, abs(v))
    if scale == 0.0:
        return SINGULAR, None
    for c in range(n):
        p = c
        for r in range(c + 1, n):
            if abs(a[r][c]) > abs(a[p][c]):
                p = r
        if abs(a[p][c]) <= PIVOT_TOL * scale:
            return SINGULAR, None
        if p != c:
            a[c], a[p] = a[p], a[c]
            rhs[c], rhs[p] = rhs[p], rhs[c]
        piv = a[c][c]
        for r in range(c + 1, n):
            fac = a[r][c] / piv
            if fac != 0.0:
                for k in range(c, n):
                    a[r][k] -= fac * a[c][k]
                rhs[r] -= fac * rhs[c]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = rhs[r]
        for k in range(r + 1, n):
            s -= a[r][k] * x[k]
        x[r] = s / a[r][r]
    return OK, x


def accel_state(N, K, kind, code, starts, consts, q, qd):
    """Acceleration of the explicit field; returns ``(status, qdd)``."""
    sys = _System(N, K, kind, code, starts, consts, [0.0] * len(q), 1e-12, 40)
    st, qdd = sys.accel(list(map(float, q)), list(map(float, qd)))
    if st != OK:
        return st, None
    return OK, np.asarray(qdd)


def rk4(N, K, kind, code, starts, consts, shift, q0, qd0, dt, nsteps, last_dt, stride,
        tol=1e-12, maxdepth=40):
    """Fixed-step classical RK4 on (q, qd)' = (qd, qdd(q, qd)).

    Returns ``(status, fail_time, times, Q, QD, E, rates, power)`` with the
    arrays truncated to the recorded samples.  Sample 0 is the initial state;
    every ``stride``-th step and the final step are recorded.
    """
    sys = _System(N, K, kind, code, starts, consts, shift, tol, maxdepth)
    m = sys.m
    cap = nsteps // stride + 2
    times = np.empty(cap)
    Q = np.empty((cap, m))
    QD = np.empty((cap, m))
    E = np.empty(cap)
    R = np.empty(cap)
    P = np.empty(cap)
    q = list(map(float, q0))
    qd = list(map(float, qd0))
    t = 0.0
    nrec = 0
    status = OK
    fail_time = math.nan

    st, a1 = sys.accel(q, qd)
    if st != OK:
        return st, 0.0, times[:0], Q[:0], QD[:0], E[:0], R[:0], P[:0]
    st, e, r, p = sys.observe(q, qd, a1)
    if st != OK:
        return st, 0.0, times[:0], Q[:0], QD[:0], E[:0], R[:0], P[:0]
    times[0], Q[0], QD[0], E[0], R[0], P[0] = t, q, qd, e, r, p
    nrec = 1

    for step in range(1, nsteps + 1):
        h = last_dt if step == nsteps else dt
        hh = 0.5 * h
        q2 = [q[j] + hh * qd[j] for j in range(m)]
        v2 = [qd[j] + hh * a1[j] for j in range(m)]
        st, a2 = sys.accel(q2, v2)
        if st == OK:
            q3 = [q[j] + hh * v2[j] for j in range(m)]
            v3 = [qd[j] + hh * a2[j] for j in range(m)]
            st, a3 = sys.accel(q3, v3)
        if st == OK:
            q4 = [q[j] + h * v3[j] for j in range(m)]
            v4 = [qd[j] + h * a3[j] for j in range(m)]
            st, a4 = sys.accel(q4, v4)
        if st != OK:
            status, fail_time = st, t
            break
        h6 = h / 6.0
        q = [q[j] + h6 * (qd[j] + 2.0 * v2[j] + 2.0 * v3[j] + v4[j]) for j in range(m)]
        qd = [qd[j] + h6 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j]) for j in range(m)]
        t = dt * step if step < nsteps else dt * (nsteps - 1) + last_dt
        if not all(abs(v) <= BLOWUP_LIMIT for v in q + qd):
            status, fail_time = BLOWUP, t
            break
        st, a1 = sys.accel(q, qd)
        if st != OK:
            status, fail_time = st, t
            break
        if step % stride == 0 or step == nsteps:
            st, e, r, p = sys.observe(q, qd, a1)
            if st != OK:
                status, fail_time = st, t
                break
            times[nrec], Q[nrec], QD[nrec] = t, q, qd
            E[nrec], R[nrec], P[nrec] = e, r, p
            nrec += 1
    return (status, fail_time, times[:nrec], Q[:nrec], QD[:nrec],
            E[:nrec], R[:nrec], P[:nrec])
