"""Energy functions, dissipative one-forms and the identities tying them to Q.

Every term of the Birkhoffian depends on q (or q') only through the scalar
device arguments, so the energies are sums of one-dimensional integrals:

    kinetic(q')  = sum_a  int_0^{sigma_a}   L_a(u) u du
    potential(q) = sum_al int_{K^al}^{s_al} C_al(u) du

The lower limit K^al fixes the gauge E(0, 0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from birknet import kernels
from birknet.birkhoffian import BirkhoffSystem, acceleration
from birknet.configspace import ConfigSpace
from birknet.netlist import NetlistDoc, characteristic_program

QUAD_TOL = 1e-12
QUAD_DEPTH = 40


class QuadratureError(ArithmeticError):
    pass


def _integral(branch, a: float, b: float, weighted: bool) -> float:
    status, value = kernels.quad_program(
        characteristic_program(branch), a, b, weighted=weighted, tol=QUAD_TOL, maxdepth=QUAD_DEPTH
    )
    if status != kernels.OK:
        raise QuadratureError(
            f"integral of {branch.name} on [{a!r}, {b!r}] failed: {kernels.STATUS_TEXT[status]}"
        )
    return float(value)


@dataclass(frozen=True, eq=False)
class EnergyFunction:
    """E(q, q') = kinetic(q') + potential(q) + linear_shift . q."""

    sys: BirkhoffSystem
    linear_shift: np.ndarray
    quadrature: bool = False  # force quadrature even for linear devices

    def _closed_form(self, l: int) -> bool:
        return not self.quadrature and self.sys.branches[l].is_linear

    def kinetic(self, qd) -> float:
        sig = self.sys.sigma(qd)
        total = 0.0
        for l in self.sys.inductors:
            br = self.sys.branches[l]
            if self._closed_form(l):
                total += 0.5 * br.model.value * sig[l] ** 2
            else:
                total += _integral(br, 0.0, sig[l], weighted=True)
        return total

    def potential(self, q) -> float:
        s = self.sys.charges(q)
        K = self.sys.K
        total = 0.0
        for l in self.sys.capacitors:
            br = self.sys.branches[l]
            if self._closed_form(l):
                total += (s[l] ** 2 - K[l] ** 2) / (2.0 * br.model.value)
            else:
                total += _integral(br, K[l], s[l], weighted=False)
        return total

    def kinetic_difference(self, qd_a, qd_b) -> float:
        """kinetic(qd_b) - kinetic(qd_a) as integrals over [sigma_a, sigma_b]."""
        sa, sb = self.sys.sigma(qd_a), self.sys.sigma(qd_b)
        total = 0.0
        for l in self.sys.inductors:
            br = self.sys.branches[l]
            if self._closed_form(l):
                total += 0.5 * br.model.value * (sb[l] - sa[l]) * (sb[l] + sa[l])
            else:
                total += _integral(br, sa[l], sb[l], weighted=True)
        return total

    def potential_difference(self, q_a, q_b) -> float:
        """(potential + shift)(q_b) - (potential + shift)(q_a), integrated directly.

        Differencing two quadratures would amplify their absolute error; a
        single integral over the short interval keeps finite differences
        accurate.
        """
        sa, sb = self.sys.charges(q_a), self.sys.charges(q_b)
        total = float(self.linear_shift @ (np.asarray(q_b, float) - np.asarray(q_a, float)))
        for l in self.sys.capacitors:
            br = self.sys.branches[l]
            if self._closed_form(l):
                total += (sb[l] - sa[l]) * (sb[l] + sa[l]) / (2.0 * br.model.value)
            else:
                total += _integral(br, sa[l], sb[l], weighted=False)
        return total

    def value(self, q, qd) -> float:
        return self.kinetic(qd) + self.potential(q) + float(self.linear_shift @ np.asarray(q, float))

    __call__ = value

    def grad_qd(self, qd) -> np.ndarray:
        """d kinetic / d q'^i = sum_a L_a(sigma_a) sigma_a N^a_i."""
        sig = self.sys.sigma(qd)
        g = np.zeros(self.sys.m)
        for l in self.sys.inductors:
            g += self.sys.law(l, sig[l])[0] * sig[l] * self.sys.N[l]
        return g

    def grad_q(self, q) -> np.ndarray:
        """d(potential + shift) / d q^i = sum_al C_al(s_al) N^al_i + shift_i."""
        s = self.sys.charges(q)
        g = self.linear_shift.astype(float).copy()
        for l in self.sys.capacitors:
            g += self.sys.law(l, s[l])[0] * self.sys.N[l]
        return g

    def liapunov(self, q_e):
        """V(q, q') = E(q, q') - E(q_e, 0)."""
        base = self.value(q_e, np.zeros(self.sys.m))
        return lambda q, qd: self.value(q, qd) - base


@dataclass(frozen=True, eq=False)
class DissipativeForm:
    """D_j(q') = sum_G N^G_j [R_G(sigma_G) - offset_G]."""

    sys: BirkhoffSystem
    offsets: np.ndarray = field(default=None)  # R_G(0) per resistor when shifted

    def components(self, qd) -> np.ndarray:
        sig = self.sys.sigma(qd)
        d = np.zeros(self.sys.m)
        for k, l in enumerate(self.sys.resistors):
            r = self.sys.law(l, sig[l])[0]
            if self.offsets is not None:
                r -= self.offsets[k]
            d += r * self.sys.N[l]
        return d

    def power(self, qd) -> float:
        """sum_j D_j(q') q'^j."""
        return float(self.components(qd) @ np.asarray(qd, float))


def resistor_offsets(sys: BirkhoffSystem) -> np.ndarray:
    return np.array([sys.law(l, 0.0)[0] for l in sys.resistors])


def build_energy(
    sys: BirkhoffSystem,
    cs: ConfigSpace | None = None,
    doc: NetlistDoc | None = None,
    shifted: bool = False,
    quadrature: bool = False,
):
    """Energy function and dissipative form (None for LC networks).

    With ``shifted`` the storage gains sum_G N^G_j R_G(0) q^j and D loses
    the R_G(0) offsets, which makes the pair work for resistors with
    R_G(0) != 0.  ``cs`` and ``doc`` are accepted for symmetry with the
    pipeline; the system already carries both.
    """
    if doc is not None and doc is not sys.doc:
        raise ValueError("netlist does not match the assembled system")
    shift = np.zeros(sys.m)
    offsets = None
    if shifted and sys.resistors:
        offsets = resistor_offsets(sys)
        for k, l in enumerate(sys.resistors):
            shift += offsets[k] * sys.N[l]
    E = EnergyFunction(sys, shift, quadrature=quadrature)
    D = DissipativeForm(sys, offsets) if sys.resistors else None
    return E, D


def _central_grad(diff, x: np.ndarray, h: float) -> np.ndarray:
    """Central differences from a difference function diff(a, b) = f(b) - f(a)."""
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = diff(x - e, x + e) / (2 * h)
    return g


@dataclass
class IdentityReport:
    max_residual_analytic: float
    max_residual_fd: float
    samples: int
    worst_sample: int | None

    @property
    def ok(self) -> bool:
        return self.max_residual_analytic <= 1e-8 and self.max_residual_fd <= 1e-8


def verify_identity(sys, E: EnergyFunction, D: DissipativeForm | None, samples, fd_step=1e-6):
    """Check sum_j Q_j q'^j = sum_j [dE/dq^j q'^j + dE/dq'^j q''^j + D_j q'^j].

    ``samples`` is an iterable of (q, q', q'') triples.  Residuals are
    divided by scale = 1 + max(|lhs|, |rhs|, |state|).  The energy partials
    come from the analytic formulas and, separately, from central
    differences of step ``fd_step``.
    """
    worst_a = 0.0
    worst_fd = 0.0
    worst = None
    n = 0
    for i, (q, qd, qdd) in enumerate(samples):
        q = np.asarray(q, float)
        qd = np.asarray(qd, float)
        qdd = np.asarray(qdd, float)
        lhs = float(sys.Q(q, qd, qdd) @ qd)
        diss = D.power(qd) if D is not None else 0.0
        gq = E.grad_q(q)
        gv = E.grad_qd(qd)
        rhs = float(gq @ qd + gv @ qdd) + diss
        gq_fd = _central_grad(E.potential_difference, q, fd_step)
        gv_fd = _central_grad(E.kinetic_difference, qd, fd_step)
        rhs_fd = float(gq_fd @ qd + gv_fd @ qdd) + diss
        scale = 1.0 + max(abs(lhs), abs(rhs), float(np.max(np.abs(np.r_[q, qd, qdd]))))
        ra = abs(lhs - rhs) / scale
        rf = abs(lhs - rhs_fd) / scale
        if ra > worst_a:
            worst = i
        worst_a = max(worst_a, ra)
        worst_fd = max(worst_fd, rf)
        n += 1
    return IdentityReport(worst_a, worst_fd, n, worst)


def energy_rate(E: EnergyFunction, D: DissipativeForm | None, sys: BirkhoffSystem):
    """dE/dt along the explicit field, as a callable (q, q') -> float."""

    def rate(q, qd):
        qdd = acceleration(sys, q, qd)
        return float(E.grad_q(q) @ np.asarray(qd, float) + E.grad_qd(qd) @ qdd)

    return rate
