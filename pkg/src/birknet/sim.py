"""Fixed-step RK4 integration of the explicit field with energy monitors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from birknet import kernels
from birknet.birkhoffian import BirkhoffSystem
from birknet.energy import EnergyFunction


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray  # samples x m
    qd: np.ndarray
    energies: np.ndarray
    rates: np.ndarray
    power: np.ndarray  # sum_j D_j q'^j per sample (0 for LC)
    status: int = kernels.OK
    fail_time: float = math.nan

    @property
    def ok(self) -> bool:
        return self.status == kernels.OK

    @property
    def message(self) -> str:
        if self.ok:
            return "ok"
        return f"{kernels.STATUS_TEXT[self.status]} at t={self.fail_time!r}"

    @property
    def states(self) -> np.ndarray:
        return np.hstack([self.q, self.qd])

    def __len__(self) -> int:
        return len(self.times)


def integrate(
    sys: BirkhoffSystem,
    E: EnergyFunction,
    x0,
    t_end: float,
    dt: float,
    record_every: int = 1,
    backend: str | None = None,
) -> Trajectory:
    """Integrate (q, q')' = (q', q''(q, q')) from x0 = (q0, q'0) to ``t_end``.

    The step count is ceil(t_end / dt); the last step is shortened to land
    on ``t_end``.  A singular mass matrix or a state beyond 1e12 truncates
    the run; the returned trajectory carries the status and failure time.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    q0, qd0 = (np.asarray(v, dtype=np.float64) for v in x0)
    nsteps = math.ceil(t_end / dt - 1e-12) if t_end > 0 else 0
    last_dt = t_end - dt * (nsteps - 1) if nsteps else 0.0
    N, K, kind, code, starts, consts = sys.kernel_arrays()
    impl = kernels.get_backend(backend)
    status, fail_time, t, Q, QD, En, R, P = impl.rk4(
        N, K, kind, code, starts, consts,
        np.ascontiguousarray(E.linear_shift, dtype=np.float64),
        np.ascontiguousarray(q0), np.ascontiguousarray(qd0),
        float(dt), int(nsteps), float(last_dt), int(record_every),
    )
    return Trajectory(
        np.asarray(t), np.asarray(Q), np.asarray(QD), np.asarray(En), np.asarray(R),
        np.asarray(P), int(status), float(fail_time),
    )


@dataclass
class MonotoneReport:
    ok: bool
    kind: str  # "conservation" or "dissipation"
    max_drift: float = 0.0
    max_increase: float = 0.0
    max_balance_error: float = 0.0
    first_violation_time: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "kind": self.kind,
            "max_drift": self.max_drift,
            "max_increase": self.max_increase,
            "max_balance_error": self.max_balance_error,
            "first_violation_time": self.first_violation_time,
        }


def verify_monotone(traj: Trajectory, case_tag, drift_rtol=1e-7, step_atol=1e-9,
                    balance_rtol=1e-7) -> MonotoneReport:
    """Conservation for LC runs, monotone decay and power balance for RLC runs."""
    E = traj.energies
    if not getattr(case_tag, "dissipative", False):
        if len(E) == 0:
            return MonotoneReport(True, "conservation")
        drift = np.abs(E - E[0])
        bound = drift_rtol * (1.0 + abs(E[0]))
        bad = np.nonzero(drift > bound)[0]
        first = float(traj.times[bad[0]]) if len(bad) else None
        return MonotoneReport(len(bad) == 0, "conservation", max_drift=float(drift.max()),
                              first_violation_time=first)
    if len(E) == 0:
        return MonotoneReport(True, "dissipation")
    inc = np.diff(E)
    bad_inc = np.nonzero(inc > step_atol)[0]
    scale = 1.0 + np.maximum(np.abs(traj.rates), np.abs(traj.power))
    balance = np.abs(traj.rates + traj.power)
    bad_bal = np.nonzero(balance > balance_rtol * scale)[0]
    times = []
    if len(bad_inc):
        times.append(float(traj.times[bad_inc[0] + 1]))
    if len(bad_bal):
        times.append(float(traj.times[bad_bal[0]]))
    return MonotoneReport(
        not times,
        "dissipation",
        max_drift=float(np.max(np.abs(E - E[0]))),
        max_increase=float(inc.max(initial=-np.inf)) if len(inc) else 0.0,
        max_balance_error=float(balance.max()),
        first_violation_time=min(times) if times else None,
    )


def strictly_decreasing_where_moving(traj: Trajectory, resolution: float = 64 * 2.0**-52) -> bool:
    """E_{i+1} < E_i on every step whose dissipated energy is representable.

    A step counts when power * dt at its start exceeds ``resolution`` times
    1 + |E|; below that the decrease is lost to rounding of E itself.
    """
    E = traj.energies
    for i in range(len(E) - 1):
        loss = traj.power[i] * (traj.times[i + 1] - traj.times[i])
        if loss > resolution * (1.0 + abs(E[i])) and not E[i + 1] < E[i]:
            return False
    return True


def write_csv(traj: Trajectory, fh) -> None:
    """Header t,q1..qm,qd1..qdm,E,dEdt; values with 17 significant digits."""
    m = traj.q.shape[1] if traj.q.ndim == 2 else 0
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"q{i + 1}" for i in range(m)] + [f"qd{i + 1}" for i in range(m)]
               + ["E", "dEdt"])
    for k in range(len(traj)):
        row = [traj.times[k], *traj.q[k], *traj.qd[k], traj.energies[k], traj.rates[k]]
        w.writerow([f"{float(v):.17g}" for v in row])


def periodicity_evidence(traj: Trajectory, atol=1e-4) -> dict:
    """Return time and closest approach to the start after leaving its neighbourhood.

    The period is estimated from the first autocorrelation peak of the
    centred state; the closest return near that time is reported.
    """
    X = traj.states
    if len(X) < 8:
        return {"period": None, "return_distance": None, "periodic": False}
    Y = X - X.mean(axis=0)
    sig = Y @ Y[0]
    # first local maximum of <Y(t), Y(0)> after the first sign change
    sign_change = np.nonzero(np.diff(np.sign(sig)) != 0)[0]
    if len(sign_change) < 2:
        return {"period": None, "return_distance": None, "periodic": False}
    lo = sign_change[1]
    hi = sign_change[2] + 1 if len(sign_change) > 2 else len(sig)
    dist = np.linalg.norm(X[lo:hi] - X[0], axis=1)
    k = lo + int(np.argmin(dist))
    d = float(np.linalg.norm(X[k] - X[0]))
    return {"period": float(traj.times[k]), "return_distance": d, "periodic": d <= atol}


def convergence_evidence(traj: Trajectory, q_e) -> dict:
    """First- and last-quarter mean distance to (q_e, 0)."""
    target = np.concatenate([np.asarray(q_e, float), np.zeros(traj.qd.shape[1])])
    dist = np.linalg.norm(traj.states - target, axis=1)
    n = len(dist)
    quarter = max(1, n // 4)
    first = float(dist[:quarter].mean())
    last = float(dist[-quarter:].mean())
    return {
        "first_quarter_mean": first,
        "last_quarter_mean": last,
        "final_distance": float(dist[-1]),
        "converging": last < 0.01 * first if first > 0 else last == 0.0,
    }
