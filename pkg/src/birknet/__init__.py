"""Stability analysis of LC/RLC network equilibria via Birkhoffian dynamics."""

from birknet.birkhoffian import BirkhoffSystem, CaseTag, assemble, regularity, vector_field
from birknet.configspace import ConfigSpace, build_chart, check_degeneracy, initial_state
from birknet.energy import build_energy, energy_rate, verify_identity
from birknet.graph import CircuitGraph, build_graph, build_incidence, build_loop_matrix, check_tellegen
from birknet.netlist import NetlistDoc, eval_model, parse_netlist
from birknet.pipeline import analyze, prepare
from birknet.sim import Trajectory, integrate, verify_monotone
from birknet.stability import (
    Equilibrium,
    StabilityVerdict,
    Verdict,
    check_conditions,
    classify,
    find_equilibria,
    liapunov_hessian,
)

__version__ = "0.1.0"
