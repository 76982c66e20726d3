"""Birkhoffian components Q_j(q, q', q'') of an RLC network on its chart.

    Q_j = sum_i mass(q')_{ji} q''^i + resistive(q')_j + capacitive(q)_j + const_j

with scalar device arguments sigma_l(q') = N^l . q' for resistors and
inductors and s_l(q) = N^l . q + K^l for capacitors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from birknet import kernels
from birknet.configspace import ConfigSpace
from birknet.netlist import Kind, NetlistDoc, characteristic, characteristic_program


class CaseTag(str, Enum):
    LIN_LC = "LinLC"
    NONLIN_LC = "NonlinLC"
    LIN_RLC = "LinRLC"
    NONLIN_RLC = "NonlinRLC"

    @property
    def linear(self) -> bool:
        return self in (CaseTag.LIN_LC, CaseTag.LIN_RLC)

    @property
    def dissipative(self) -> bool:
        return self in (CaseTag.LIN_RLC, CaseTag.NONLIN_RLC)


class SingularMassError(ArithmeticError):
    def __init__(self, q, qd):
        super().__init__(f"singular mass matrix at q={list(q)}, q'={list(qd)}")
        self.q = np.asarray(q)
        self.qd = np.asarray(qd)


def _scale(*arrays) -> float:
    return 1.0 + max((float(np.max(np.abs(a), initial=0.0)) for a in arrays), default=0.0)


@dataclass(frozen=True, eq=False)
class BirkhoffSystem:
    case: CaseTag
    N: np.ndarray  # float b x m
    K: np.ndarray
    doc: NetlistDoc
    resistors: tuple
    inductors: tuple
    capacitors: tuple
    # linear-case constants
    mass0: np.ndarray
    damping: np.ndarray
    stiffness: np.ndarray
    const_term: np.ndarray

    @property
    def m(self) -> int:
        return self.N.shape[1]

    @property
    def branches(self):
        return self.doc.branches

    # scalar device arguments -------------------------------------------------

    def sigma(self, qd) -> np.ndarray:
        return self.N @ np.asarray(qd, dtype=float)

    def charges(self, q) -> np.ndarray:
        return self.N @ np.asarray(q, dtype=float) + self.K

    def law(self, l: int, x: float) -> tuple[float, float]:
        return characteristic(self.branches[l], float(x))

    # Birkhoffian parts -------------------------------------------------------

    def mass(self, qd) -> np.ndarray:
        if self.case.linear:
            return self.mass0.copy()
        sig = self.sigma(qd)
        M = np.zeros((self.m, self.m))
        for l in self.inductors:
            M += self.law(l, sig[l])[0] * np.outer(self.N[l], self.N[l])
        return M

    def resistive(self, qd) -> np.ndarray:
        if self.case.linear:
            return self.damping @ np.asarray(qd, dtype=float)
        sig = self.sigma(qd)
        out = np.zeros(self.m)
        for l in self.resistors:
            out += self.N[l] * self.law(l, sig[l])[0]
        return out

    def capacitive(self, q) -> np.ndarray:
        """Capacitor forces; in the linear case without the constant part."""
        if self.case.linear:
            return self.stiffness @ np.asarray(q, dtype=float)
        s = self.charges(q)
        out = np.zeros(self.m)
        for l in self.capacitors:
            out += self.N[l] * self.law(l, s[l])[0]
        return out

    def capacitive_jacobian(self, q) -> np.ndarray:
        if self.case.linear:
            return self.stiffness.copy()
        s = self.charges(q)
        J = np.zeros((self.m, self.m))
        for l in self.capacitors:
            J += self.law(l, s[l])[1] * np.outer(self.N[l], self.N[l])
        return J

    def forces(self, q, qd) -> np.ndarray:
        return self.resistive(qd) + self.capacitive(q) + self.const_term

    def Q(self, q, qd, qdd) -> np.ndarray:
        return self.mass(qd) @ np.asarray(qdd, dtype=float) + self.forces(q, qd)

    def equilibrium_residual(self, q) -> np.ndarray:
        """Q(q, 0, 0)."""
        return self.forces(q, np.zeros(self.m))

    # kernel packing ----------------------------------------------------------

    def kernel_arrays(self):
        """Flat arrays for :mod:`birknet.kernels` (device laws as programs)."""
        kind = {Kind.RESISTOR: 0, Kind.INDUCTOR: 1, Kind.CAPACITOR: 2}
        code, starts, consts = kernels.pack_programs(
            [characteristic_program(br) for br in self.branches]
        )
        return (
            np.ascontiguousarray(self.N, dtype=np.float64),
            np.ascontiguousarray(self.K, dtype=np.float64),
            np.asarray([kind[br.kind] for br in self.branches], dtype=np.int32),
            code,
            starts,
            consts,
        )


def _case_for(doc: NetlistDoc) -> CaseTag:
    if doc.all_linear:
        return CaseTag.LIN_RLC if doc.r else CaseTag.LIN_LC
    return CaseTag.NONLIN_RLC if doc.r else CaseTag.NONLIN_LC


def assemble(cs: ConfigSpace, doc: NetlistDoc, case: CaseTag | None = None) -> BirkhoffSystem:
    """Build the Birkhoffian of ``doc`` on the chart ``cs``.

    ``case`` defaults to (any nonlinear device?) x (any resistor?).  A linear
    tag may be forced only for all-linear networks.
    """
    if case is None:
        case = _case_for(doc)
    elif case.linear and not doc.all_linear:
        raise ValueError(f"case {case.value} needs all-linear devices")
    N = cs.N.astype(float)
    K = cs.K.astype(float)
    m = N.shape[1]
    groups = {kind: tuple(l for l, br in enumerate(doc.branches) if br.kind is kind) for kind in Kind}
    mass0 = np.zeros((m, m))
    damping = np.zeros((m, m))
    stiffness = np.zeros((m, m))
    const = np.zeros(m)
    if case.linear:
        for l in groups[Kind.INDUCTOR]:
            mass0 += doc.branches[l].model.value * np.outer(N[l], N[l])
        for l in groups[Kind.RESISTOR]:
            damping += doc.branches[l].model.value * np.outer(N[l], N[l])
        for l in groups[Kind.CAPACITOR]:
            c = doc.branches[l].model.value
            stiffness += np.outer(N[l], N[l]) / c
            const += N[l] * K[l] / c
    return BirkhoffSystem(
        case=case,
        N=N,
        K=K,
        doc=doc,
        resistors=groups[Kind.RESISTOR],
        inductors=groups[Kind.INDUCTOR],
        capacitors=groups[Kind.CAPACITOR],
        mass0=mass0,
        damping=damping,
        stiffness=stiffness,
        const_term=const,
    )


def _det_ok(M: np.ndarray, tol: float = 1e-12) -> bool:
    m = M.shape[0]
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    return abs(float(np.linalg.det(M))) > tol * scale**m


def regularity(sys: BirkhoffSystem, qdot_samples=()) -> bool:
    """det(mass(q')) != 0 at q' = 0 and at every sample."""
    if not _det_ok(sys.mass(np.zeros(sys.m))):
        return False
    return all(_det_ok(sys.mass(qd)) for qd in qdot_samples)


def acceleration(sys: BirkhoffSystem, q, qd, rtol: float = 1e-10) -> np.ndarray:
    """q'' solving Q(q, q', q'') = 0, with a residual check."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    M = sys.mass(qd)
    if not _det_ok(M):
        raise SingularMassError(q, qd)
    rhs = -sys.forces(q, qd)
    qdd = np.linalg.solve(M, rhs)
    residual = np.max(np.abs(M @ qdd - rhs), initial=0.0)
    if residual > rtol * _scale(q, qd, qdd, rhs):
        raise SingularMassError(q, qd)
    return qdd


def vector_field(sys: BirkhoffSystem):
    """The explicit second-order field as a callable (q, q') -> q''."""

    def field(q, qd):
        return acceleration(sys, q, qd)

    return field
