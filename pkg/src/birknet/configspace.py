"""Affine configuration space {x : B^T x = c} and its chart x = N q + K."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from birknet import exact
from birknet.graph import CircuitGraph
from birknet.netlist import Kind, NetlistDoc, characteristic


class ChartError(ValueError):
    pass


class InitialConditionError(ValueError):
    pass


@dataclass(frozen=True)
class ConfigSpace:
    N: np.ndarray  # b x m integer
    K: np.ndarray  # b real
    c: np.ndarray  # n real
    coord_branches: tuple | None  # 0-based branch indices used as q, or None for a loop basis

    @property
    def b(self) -> int:
        return self.N.shape[0]

    @property
    def m(self) -> int:
        return self.N.shape[1]

    def x(self, q) -> np.ndarray:
        return self.N @ np.asarray(q, dtype=float) + self.K


def _pivot_solution(g: CircuitGraph, coords: Sequence[int] | None):
    """Exact RREF of B^T with pivots restricted to the non-coordinate columns."""
    Bt = g.B.T
    b = g.b
    if coords is None:
        red, pivots, T = exact.rref(Bt)
    else:
        coords = list(coords)
        if len(set(coords)) != len(coords) or any(not 0 <= c < b for c in coords):
            raise ChartError(f"invalid coordinate branches {coords}")
        if len(coords) != g.m:
            raise ChartError(f"need exactly m={g.m} coordinate branches, got {len(coords)}")
        red, pivots, T = exact.rref(Bt, [c for c in range(b) if c not in coords])
    if len(pivots) != g.n:
        if coords is None:
            raise ChartError(f"rank(B) = {len(pivots)} < n = {g.n}")
        raise ChartError("the chosen coordinates do not parameterize the configuration space")
    free = [c for c in range(b) if c not in pivots]
    return red, pivots, T, free


def build_chart(
    g: CircuitGraph,
    c_vec,
    coords: Sequence[int] | None = None,
    basis=None,
) -> ConfigSpace:
    """Solve B^T x = c for x = N q + K.

    By default the free (non-pivot) variables of the exact echelon form of
    B^T become q; ``coords`` forces which branches are coordinates.  With
    ``basis`` (an integer b x m matrix spanning Ker B^T, e.g. a loop matrix)
    the chart is x = basis q + K instead, K being the particular solution
    of the coordinate chart.
    """
    c_vec = np.asarray(c_vec, dtype=float)
    if c_vec.shape != (g.n,):
        raise ChartError(f"constraint vector must have length n={g.n}")
    red, pivots, T, free = _pivot_solution(g, coords)
    b = g.b
    N = np.zeros((b, len(free)), dtype=np.int64)
    for j, f in enumerate(free):
        N[f, j] = 1
    c_frac = [Fraction(v) for v in c_vec]
    K = np.zeros(b)
    for r, p in enumerate(pivots):
        for j, f in enumerate(free):
            v = -red[r][f]
            if v.denominator != 1:
                raise ChartError("non-integer chart coefficient; B is not an incidence matrix")
            N[p, j] = int(v)
        K[p] = float(sum((T[r][i] * c_frac[i] for i in range(g.n)), Fraction(0)))
    if basis is not None:
        basis = np.asarray(basis, dtype=np.int64)
        if basis.shape != (b, g.m):
            raise ChartError(f"basis must be {b} x {g.m}")
        if np.any(exact.int_matmul(g.B.T, basis) != 0) or exact.rank(basis) != g.m:
            raise ChartError("basis does not span Ker(B^T)")
        return ConfigSpace(basis.copy(), K, c_vec.copy(), None)
    return ConfigSpace(N, K, c_vec.copy(), tuple(free))


class InitialState(NamedTuple):
    c_vec: np.ndarray
    q0: np.ndarray
    qdot0: np.ndarray
    underdetermined: bool = False


def branch_initial_values(doc: NetlistDoc) -> tuple[np.ndarray, np.ndarray]:
    """Branch charges x(0) (capacitors only, others 0) and inductor currents."""
    x0 = np.zeros(doc.b)
    currents = np.zeros(doc.b)
    for l, br in enumerate(doc.branches):
        value = doc.initial_conditions.get(br.name, 0.0)
        if br.kind is Kind.CAPACITOR:
            x0[l] = value
        elif br.kind is Kind.INDUCTOR:
            currents[l] = value
    return x0, currents


def initial_state(
    doc: NetlistDoc,
    g: CircuitGraph,
    coords: Sequence[int] | None = None,
    basis=None,
    tol: float = 1e-9,
) -> InitialState:
    """Map capacitor charges and inductor currents to (c, q(0), q'(0))."""
    x0, currents = branch_initial_values(doc)
    c_vec = (g.B.T @ x0).astype(float)
    cs = build_chart(g, c_vec, coords=coords, basis=basis)
    N = cs.N.astype(float)

    if cs.coord_branches is not None:
        q0 = x0[list(cs.coord_branches)].copy()
    else:
        q0, *_ = np.linalg.lstsq(N, x0 - cs.K, rcond=None)
        if np.max(np.abs(N @ q0 + cs.K - x0), initial=0.0) > tol * (1 + np.max(np.abs(x0))):
            raise InitialConditionError("initial charges are not representable in the chart")

    ind = [l for l, br in enumerate(doc.branches) if br.kind is Kind.INDUCTOR]
    if ind:
        N_L = N[ind]
        i_L = currents[ind]
        qdot0, *_ = np.linalg.lstsq(N_L, i_L, rcond=None)
        residual = np.max(np.abs(N_L @ qdot0 - i_L))
        if residual > tol:
            raise InitialConditionError(
                f"inductor currents violate KCL (residual {residual:.3e})"
            )
        underdetermined = exact.rank(cs.N[ind]) < cs.m
    else:
        qdot0 = np.zeros(cs.m)
        underdetermined = True
    return InitialState(c_vec, q0, qdot0, bool(underdetermined))


@dataclass
class DegeneracyReport:
    case: str
    capacitor_loop_detected: bool
    inductor_loop_detected: bool
    null_vector: list | None
    determinant_values: dict
    loop_branches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.capacitor_loop_detected or self.inductor_loop_detected)

    def describe(self) -> str:
        if self.ok:
            return "no degenerate loops"
        kind = "capacitor loop" if self.capacitor_loop_detected else "inductor loop"
        return f"{kind}: branches {', '.join(self.loop_branches)}"

    def to_dict(self) -> dict:
        return {
            "capacitor_loop_detected": self.capacitor_loop_detected,
            "inductor_loop_detected": self.inductor_loop_detected,
            "null_vector": self.null_vector,
            "determinant_values": self.determinant_values,
            "loop_branches": self.loop_branches,
        }


def _weighted_gram(N: np.ndarray, rows: list[int], weights: list[float]) -> np.ndarray:
    m = N.shape[1]
    M = np.zeros((m, m))
    for l, w in zip(rows, weights):
        M += w * np.outer(N[l], N[l])
    return M


def _singular(M: np.ndarray, rtol: float = 1e-12):
    """(is_singular, null vector) by singular values."""
    if not np.any(M):
        v = np.zeros(M.shape[0])
        v[0] = 1.0
        return True, v
    _, s, vt = np.linalg.svd(M)
    if s[-1] <= rtol * s[0]:
        return True, vt[-1]
    return False, None


def check_degeneracy(cs: ConfigSpace, doc: NetlistDoc) -> DegeneracyReport:
    """Evaluate the determinant conditions for the inductor and capacitor forms.

    The inductor form is sum_a L_a N^a N^a^T (constants, or L_a(0) for
    nonlinear inductors).  The capacitor form is sum_alpha N^alpha N^alpha^T / C_alpha
    for all-linear networks; with nonlinear devices its unweighted
    (topological) version is tested.  A null vector v of a singular form is
    a loop current pattern; the branches with (N v)_l != 0 form the loop.
    """
    N = cs.N.astype(float)
    linear = doc.all_linear
    ind = [l for l, br in enumerate(doc.branches) if br.kind is Kind.INDUCTOR]
    cap = [l for l, br in enumerate(doc.branches) if br.kind is Kind.CAPACITOR]
    mass = _weighted_gram(N, ind, [characteristic(doc.branches[l], 0.0)[0] for l in ind])
    if linear:
        stiff_w = [1.0 / doc.branches[l].model.value for l in cap]
    else:
        stiff_w = [1.0] * len(cap)
    stiff = _weighted_gram(N, cap, stiff_w)

    dets = {
        "inductor_form": float(np.linalg.det(mass)),
        "capacitor_form": float(np.linalg.det(stiff)),
    }
    cap_loop, v_mass = _singular(mass)
    ind_loop, v_stiff = _singular(stiff)

    null = None
    loop: list[str] = []
    v = v_mass if cap_loop else (v_stiff if ind_loop else None)
    if v is not None:
        v = v / np.max(np.abs(v))
        null = [float(t) for t in v]
        flow = N @ v
        loop = [doc.branches[l].name for l in range(cs.b) if abs(flow[l]) > 1e-9]
    case = ("Lin" if linear else "Nonlin") + ("RLC" if doc.r else "LC")
    return DegeneracyReport(case, cap_loop, ind_loop, null, dets, loop)
