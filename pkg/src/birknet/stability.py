"""Equilibria, sufficient stability conditions, Liapunov Hessian, verdicts."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from birknet.birkhoffian import BirkhoffSystem, CaseTag
from birknet.energy import EnergyFunction, build_energy, energy_rate
from birknet.expr import DomainError

DEFAULT_SEED = 42
RESIDUAL_RTOL = 1e-10
DEDUP_DIST = 1e-8
STEP_RTOL = 1e-9
SECTOR_GRID = np.logspace(-6, 3, 61)

HOLDS = "holds"
FAILS = "fails"
SAMPLED = "sampled"


class Verdict(str, Enum):
    STABLE_CENTER = "StableCenter"
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    LOCALLY_ASYMPTOTICALLY_STABLE = "LocallyAsymptoticallyStable"
    LOCALLY_STABLE_CENTER = "LocallyStableCenter"
    INCONCLUSIVE = "Inconclusive"


class SingularStiffnessError(ArithmeticError):
    pass


class HessianMismatchError(ArithmeticError):
    pass


@dataclass
class Equilibrium:
    q_e: np.ndarray
    residual: float
    basin_hint: list = field(default_factory=list)


def seed_from_env() -> int:
    return int(os.environ.get("BIR_SEED", DEFAULT_SEED))


# equilibria -------------------------------------------------------------------


def _residual_scale(sys: BirkhoffSystem, q) -> float:
    """1 + the largest state entry or single device contribution at (q, 0)."""
    s = sys.charges(q)
    terms = [abs(sys.law(l, s[l])[0]) for l in sys.capacitors]
    terms += [abs(sys.law(l, 0.0)[0]) for l in sys.resistors]
    return 1.0 + max([float(np.max(np.abs(q), initial=0.0))] + terms)


def _safe_residual(sys, q):
    try:
        F = sys.equilibrium_residual(q)
    except (DomainError, OverflowError, ArithmeticError):
        return None
    return F if np.all(np.isfinite(F)) else None


def newton(sys: BirkhoffSystem, q0, max_iter=100, max_halvings=30, armijo=1e-4):
    """Damped Newton on Q(q, 0, 0) = 0 with Armijo backtracking on |F|^2.

    Converged means |F| <= 1e-10 * scale and a Newton correction below
    1e-9 * (1 + |q|).  Returns the converged point or None.
    """
    q = np.asarray(q0, dtype=float).copy()
    F = _safe_residual(sys, q)
    if F is None:
        return None
    for _ in range(max_iter + 1):
        J = sys.capacitive_jacobian(q)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(J, -F, rcond=None)
        if not np.all(np.isfinite(step)):
            return None
        # a small residual alone admits asymptotes such as exp(q) -> 0;
        # a root also needs a small Newton correction
        small_step = np.max(np.abs(step)) <= STEP_RTOL * (1.0 + np.max(np.abs(q)))
        if small_step and np.max(np.abs(F)) <= RESIDUAL_RTOL * _residual_scale(sys, q):
            return q
        phi = float(F @ F)
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = q + t * step
            Ft = _safe_residual(sys, trial)
            if Ft is not None and float(Ft @ Ft) <= (1.0 - 2.0 * armijo * t) * phi:
                break
            t *= 0.5
        else:
            return None
        q, F = trial, Ft
    return None


def newton_seeds(m: int, seed: int = DEFAULT_SEED, n_random: int = 50, spread: float = 10.0):
    """Origin, +-1 and +-10 along each axis, then seeded uniform points."""
    seeds = [np.zeros(m)]
    for i in range(m):
        for v in (1.0, -1.0, 10.0, -10.0):
            e = np.zeros(m)
            e[i] = v
            seeds.append(e)
    rng = np.random.default_rng(seed)
    seeds.extend(rng.uniform(-spread, spread, size=(n_random, m)))
    return seeds


def find_equilibria(sys: BirkhoffSystem, seed: int | None = None) -> list[Equilibrium]:
    """Solutions of Q(q, 0, 0) = 0.

    Linear networks have one equilibrium, from a direct solve.  Nonlinear
    networks are searched by damped Newton from a deterministic set of
    seeds; roots closer than 1e-8 are merged.
    """
    m = sys.m
    if sys.case.linear:
        S = sys.stiffness
        scale = max(1.0, float(np.max(np.abs(S))))
        if abs(np.linalg.det(S)) <= 1e-12 * scale**m:
            raise SingularStiffnessError("capacitor stiffness matrix is singular")
        q = np.linalg.solve(S, -sys.const_term)
        res = float(np.max(np.abs(sys.equilibrium_residual(q)), initial=0.0))
        return [Equilibrium(q, res, [])]

    seed = seed_from_env() if seed is None else seed
    found: list[tuple[np.ndarray, np.ndarray]] = []
    for s in newton_seeds(m, seed):
        q = newton(sys, s)
        if q is not None:
            found.append((q, s))
    found.sort(key=lambda pair: tuple(pair[0]))
    merged: list[Equilibrium] = []
    for q, s in found:
        for eq in merged:
            if np.linalg.norm(eq.q_e - q) <= DEDUP_DIST:
                eq.basin_hint.append(s.tolist())
                break
        else:
            res = float(np.max(np.abs(sys.equilibrium_residual(q)), initial=0.0))
            merged.append(Equilibrium(q, res, [s.tolist()]))
    return merged


# conditions -------------------------------------------------------------------


def _combine(statuses) -> str:
    statuses = list(statuses)
    if any(s == FAILS for s in statuses):
        return FAILS
    if any(s == SAMPLED for s in statuses):
        return SAMPLED
    return HOLDS


def _sign(ok: bool) -> str:
    return HOLDS if ok else FAILS


def sector_status(sys: BirkhoffSystem, l: int, shifted: bool) -> str:
    """x (R(x) - offset) > 0 for x != 0, where offset is R(0) if ``shifted``.

    Linear resistors are decided exactly (R > 0).  Expression resistors are
    sampled on +-logspace(-6, 3) with R'(0) >= 0 as a necessary witness.
    """
    br = sys.branches[l]
    if br.is_linear:
        return _sign(br.model.value > 0)
    try:
        r0, d0 = sys.law(l, 0.0)
        offset = r0 if shifted else 0.0
        if d0 < 0:
            return FAILS
        for x in np.concatenate([SECTOR_GRID, -SECTOR_GRID]):
            r, _ = sys.law(l, x)
            if not (np.isfinite(r) and x * (r - offset) > 0):
                return FAILS
    except (DomainError, ArithmeticError):
        return FAILS
    return SAMPLED


def check_conditions(sys: BirkhoffSystem, q_e) -> dict[str, str]:
    """Status of each hypothesis relevant to the network's case.

    Linear cases: constant signs of L, C (and R).  Nonlinear cases: L(0) > 0,
    C'(s(q_e)) > 0, and for resistors R(0) = 0, the sector condition and
    its shifted variant.
    """
    branches = sys.branches
    out: dict[str, str] = {}

    def law_or_none(l, x):
        try:
            return sys.law(l, x)
        except (DomainError, ArithmeticError):
            return None

    if sys.case.linear:
        out["inductance_positive"] = _combine(
            _sign(branches[l].model.value > 0) for l in sys.inductors
        )
        out["capacitance_positive"] = _combine(
            _sign(branches[l].model.value > 0) for l in sys.capacitors
        )
        if sys.case.dissipative:
            out["resistance_positive"] = _combine(
                _sign(branches[l].model.value > 0) for l in sys.resistors
            )
        return out

    s = sys.charges(q_e)
    vals = [law_or_none(l, 0.0) for l in sys.inductors]
    out["inductance_at_zero_positive"] = _combine(
        _sign(v is not None and v[0] > 0) for v in vals
    )
    vals = [law_or_none(l, s[l]) for l in sys.capacitors]
    out["capacitance_slope_positive"] = _combine(
        _sign(v is not None and v[1] > 0) for v in vals
    )
    if sys.case.dissipative:
        vals = [law_or_none(l, 0.0) for l in sys.resistors]
        out["resistance_zero_at_origin"] = _combine(
            _sign(v is not None and v[0] == 0.0) for v in vals
        )
        out["sector"] = _combine(sector_status(sys, l, False) for l in sys.resistors)
        out["shifted_sector"] = _combine(sector_status(sys, l, True) for l in sys.resistors)
    return out


def needs_shift(sys: BirkhoffSystem) -> bool:
    """True when some resistor has R(0) != 0, so the shifted energy applies."""
    for l in sys.resistors:
        try:
            if sys.law(l, 0.0)[0] != 0.0:
                return True
        except (DomainError, ArithmeticError):
            return False
    return False


# Hessian ----------------------------------------------------------------------


@dataclass
class HessianResult:
    matrix: np.ndarray
    min_eigenvalue: float
    positive_definite: bool
    fd_error: float


def _pd_by_cholesky(H: np.ndarray) -> bool:
    m = H.shape[0]
    tr = float(np.trace(H))
    if tr <= 0:
        return False
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return False
    pivots = np.diag(L) ** 2
    return bool(np.min(pivots) > 1e-12 * tr / m)


def _fd_hessian(E: EnergyFunction, q_e, h: float) -> np.ndarray:
    """Second central differences of V around (q_e, 0), using direct integrals."""
    m = len(q_e)
    z0 = np.zeros(2 * m)

    def V(z):
        return E.potential_difference(q_e, q_e + z[:m]) + E.kinetic_difference(z0[:m], z[m:])

    n = 2 * m
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            val = (V(ei + ej) - V(ei - ej) - V(ej - ei) + V(-ei - ej)) / (4 * h * h)
            H[i, j] = H[j, i] = val
    return H


def liapunov_hessian(sys: BirkhoffSystem, E: EnergyFunction, q_e, fd_step=1e-4, fd_rtol=1e-5):
    """Hessian of V = E - E(q_e, 0) at (q_e, 0), ordered (q, q').

    Analytic blocks: position sum C'(s(q_e)) N N^T, velocity sum L(0) N N^T.
    Raises HessianMismatchError if central differences disagree beyond
    ``fd_rtol`` relative to max(1, |H|).
    """
    m = sys.m
    q_e = np.asarray(q_e, dtype=float)
    H = np.zeros((2 * m, 2 * m))
    H[:m, :m] = sys.capacitive_jacobian(q_e)
    H[m:, m:] = sys.mass(np.zeros(m))
    Hfd = _fd_hessian(E, q_e, fd_step)
    err = float(np.max(np.abs(Hfd - H))) / max(1.0, float(np.max(np.abs(H))))
    if err > fd_rtol:
        raise HessianMismatchError(f"finite-difference Hessian differs by {err:.3e}")
    return HessianResult(H, float(np.linalg.eigvalsh(H)[0]), _pd_by_cholesky(H), err)


# verdicts ---------------------------------------------------------------------


@dataclass
class StabilityVerdict:
    classification: Verdict
    conditions: dict
    hessian: np.ndarray
    hessian_min_eigenvalue: float
    positive_definite: bool
    shifted_energy: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "conditions": dict(self.conditions),
            "hessian": self.hessian.tolist(),
            "min_eigenvalue": self.hessian_min_eigenvalue,
            "positive_definite": self.positive_definite,
            "shifted_energy": self.shifted_energy,
            "notes": list(self.notes),
        }


def _all_ok(conditions, names) -> bool:
    return all(conditions.get(n) in (HOLDS, SAMPLED) for n in names)


def classify(
    case: CaseTag, conditions: dict, hessian: HessianResult, shifted: bool = False
) -> StabilityVerdict:
    """Apply the decision table; anything not covered is Inconclusive."""
    notes: list[str] = []
    verdict = Verdict.INCONCLUSIVE
    lin = ("inductance_positive", "capacitance_positive")
    nonlin = ("inductance_at_zero_positive", "capacitance_slope_positive")
    if case is CaseTag.LIN_LC:
        if _all_ok(conditions, lin):
            verdict = Verdict.STABLE_CENTER
    elif case is CaseTag.NONLIN_LC:
        if _all_ok(conditions, nonlin) and hessian.positive_definite:
            verdict = Verdict.LOCALLY_STABLE_CENTER
    elif case is CaseTag.LIN_RLC:
        if _all_ok(conditions, lin + ("resistance_positive",)):
            verdict = Verdict.ASYMPTOTICALLY_STABLE
    elif _all_ok(conditions, nonlin):
        if conditions.get("resistance_zero_at_origin") == HOLDS and _all_ok(conditions, ["sector"]):
            verdict = Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
        elif shifted and _all_ok(conditions, ["shifted_sector"]):
            verdict = Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
            notes.append("shifted energy: storage includes R(0) terms linear in q")
    if any(v == SAMPLED for v in conditions.values()):
        notes.append("sector conditions verified by sampling only")
    if verdict is Verdict.INCONCLUSIVE:
        failed = sorted(k for k, v in conditions.items() if v == FAILS)
        if failed:
            notes.append("failed: " + ", ".join(failed))
        elif not hessian.positive_definite:
            notes.append("Hessian of V is not positive definite")
    return StabilityVerdict(
        verdict,
        dict(conditions),
        hessian.matrix,
        hessian.min_eigenvalue,
        hessian.positive_definite,
        shifted,
        notes,
    )


def analyze_equilibrium(sys: BirkhoffSystem, q_e) -> StabilityVerdict:
    """Conditions, Hessian and verdict for one equilibrium."""
    shifted = needs_shift(sys)
    E, _ = build_energy(sys, shifted=shifted)
    conditions = check_conditions(sys, q_e)
    hess = liapunov_hessian(sys, E, q_e)
    return classify(sys.case, conditions, hess, shifted)


@dataclass
class BallCheck:
    points: int
    min_value: float
    max_rate: float
    max_rate_moving: float  # over points with q' != 0
    rate_atol: float = 1e-12

    @property
    def positive(self) -> bool:
        return self.min_value > 0

    @property
    def nonincreasing(self) -> bool:
        return self.max_rate <= self.rate_atol


def liapunov_ball_check(sys, E: EnergyFunction, q_e, radius=0.1, points=500, seed=DEFAULT_SEED,
                        rate_atol=1e-12):
    """Sample V and dV/dt on the punctured ball of ``radius`` around (q_e, 0)."""
    m = sys.m
    q_e = np.asarray(q_e, float)
    V = E.liapunov(q_e)
    rate = energy_rate(E, None, sys)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(points, 2 * m))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.05, 1.0, size=points) ** (1.0 / (2 * m))
    min_v = np.inf
    max_r = -np.inf
    max_r_moving = -np.inf
    for d, rho in zip(dirs, radii):
        z = rho * d
        q, qd = q_e + z[:m], z[m:]
        min_v = min(min_v, V(q, qd))
        r = rate(q, qd)
        max_r = max(max_r, r)
        if np.any(qd != 0):
            max_r_moving = max(max_r_moving, r)
    return BallCheck(points, float(min_v), float(max_r), float(max_r_moving), rate_atol)
