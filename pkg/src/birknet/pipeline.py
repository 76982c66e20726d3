"""End-to-end analysis: netlist -> graph -> chart -> Birkhoffian -> verdicts."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from birknet.birkhoffian import BirkhoffSystem, assemble
from birknet.configspace import (
    ConfigSpace,
    DegeneracyReport,
    InitialState,
    build_chart,
    check_degeneracy,
    initial_state,
)
from birknet.energy import build_energy
from birknet.graph import CircuitGraph, build_graph
from birknet.netlist import NetlistDoc, format_netlist
from birknet.sim import convergence_evidence, integrate, periodicity_evidence, verify_monotone
from birknet.stability import analyze_equilibrium, find_equilibria, needs_shift

DEFAULT_T_END = 20.0
DEFAULT_DT = 1e-2


class DegenerateNetworkError(ValueError):
    def __init__(self, report: DegeneracyReport):
        super().__init__(report.describe())
        self.report = report


@dataclass
class Network:
    doc: NetlistDoc
    graph: CircuitGraph
    init: InitialState
    chart: ConfigSpace
    degeneracy: DegeneracyReport
    system: BirkhoffSystem


def parse_coords(text: str, doc: NetlistDoc) -> list[int]:
    """``x5,x6`` (1-based positions in R, L, C order) or branch names -> indices."""
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        m = re.fullmatch(r"[xX](\d+)", tok)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= doc.b:
                raise ValueError(f"coordinate {tok} out of range x1..x{doc.b}")
            out.append(k - 1)
        else:
            try:
                out.append(doc.index(tok))
            except KeyError:
                raise ValueError(f"unknown coordinate {tok!r}") from None
    return out


def prepare(doc: NetlistDoc, coords: Sequence[int] | None = None, basis=None,
            require_regular: bool = True) -> Network:
    """Build everything up to the Birkhoffian; raises DegenerateNetworkError."""
    g = build_graph(doc)
    init = initial_state(doc, g, coords=coords, basis=basis)
    cs = build_chart(g, init.c_vec, coords=coords, basis=basis)
    deg = check_degeneracy(cs, doc)
    if require_regular and not deg.ok:
        raise DegenerateNetworkError(deg)
    sys = assemble(cs, doc)
    return Network(doc, g, init, cs, deg, sys)


def _number(v):
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def chart_dict(net: Network) -> dict:
    cs = net.chart
    coords = (
        [f"x{i + 1}" for i in cs.coord_branches] if cs.coord_branches is not None else "loop basis"
    )
    return {
        "N": cs.N.tolist(),
        "K": [_number(v) for v in cs.K],
        "c": [_number(v) for v in cs.c],
        "coordinates": coords,
        "q0": net.init.q0.tolist(),
        "qdot0": net.init.qdot0.tolist(),
        "currents_underdetermined": net.init.underdetermined,
    }


def simulate(net: Network, t_end: float = DEFAULT_T_END, dt: float = DEFAULT_DT,
             record_every: int = 1, backend=None):
    E, _ = build_energy(net.system, shifted=needs_shift(net.system))
    traj = integrate(net.system, E, (net.init.q0, net.init.qdot0), t_end, dt,
                     record_every=record_every, backend=backend)
    return traj, verify_monotone(traj, net.system.case)


def analyze(doc: NetlistDoc, coords=None, basis=None, seed: int | None = None,
            t_end: float = DEFAULT_T_END, dt: float = DEFAULT_DT) -> dict:
    """Full report as a JSON-ready dict; raises DegenerateNetworkError."""
    net = prepare(doc, coords, basis)
    sys = net.system
    equilibria = find_equilibria(sys, seed=seed)
    eq_out = []
    for eq in equilibria:
        verdict = analyze_equilibrium(sys, eq.q_e)
        eq_out.append({"q_e": eq.q_e.tolist(), "residual": eq.residual, **verdict.to_dict()})

    traj, mono = simulate(net, t_end, dt, record_every=max(1, round(0.1 / dt)))
    sim = {
        "t_end": t_end,
        "dt": dt,
        "status": traj.message,
        "samples": len(traj),
        "energy_start": float(traj.energies[0]) if len(traj) else None,
        "energy_end": float(traj.energies[-1]) if len(traj) else None,
        "final_q": traj.q[-1].tolist() if len(traj) else None,
        "final_qdot": traj.qd[-1].tolist() if len(traj) else None,
        "monotone": mono.to_dict(),
    }
    if traj.ok and len(traj) and sys.case.dissipative and equilibria:
        nearest = min(equilibria, key=lambda e: np.linalg.norm(e.q_e - traj.q[-1]))
        sim["convergence"] = convergence_evidence(traj, nearest.q_e)
    elif traj.ok and not sys.case.dissipative:
        sim["periodicity"] = periodicity_evidence(traj)

    return {
        "netlist_echo": format_netlist(doc),
        "graph_summary": net.graph.summary(),
        "chart": chart_dict(net),
        "degeneracy": net.degeneracy.to_dict(),
        "birkhoffian_case": sys.case.value,
        "equilibria": eq_out,
        "simulation": sim,
    }
