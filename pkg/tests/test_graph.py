import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birknet import exact
from birknet.graph import (
    GraphError,
    build_graph,
    build_incidence,
    build_loop_matrix,
    check_tellegen,
)
from birknet.netlist import parse_netlist

from _netgen import graph_netlist, random_edges, section4

# incidence and loop matrices printed for the six-branch example
B_REF = np.array([[1, -1, 0, 0], [0, 0, 0, 1], [0, 1, -1, 0], [0, 1, 0, -1], [-1, 0, 0, 0],
                  [0, 0, 1, -1]])
A_REF = np.array([[1, 0], [1, 0], [0, 1], [1, -1], [1, 0], [0, 1]])


def test_section4_incidence_is_exact():
    assert np.array_equal(build_incidence(parse_netlist(section4())), B_REF)


def test_section4_loop_matrix_spans_reference_loops():
    A, tree = build_loop_matrix(parse_netlist(section4()))
    assert A.shape == (6, 2)
    assert exact.same_column_space(A, A_REF)
    assert exact.same_lattice(A, A_REF)
    assert len(tree) == 4
    assert not np.any(exact.int_matmul(A.T, B_REF))


def test_summary_counts():
    g = build_graph(parse_netlist(section4()))
    assert g.summary() == {"b": 6, "n": 4, "m": 2, "rank_B": 4, "rank_A": 2, "tellegen": True}


def test_two_branch_loop():
    g = build_graph(parse_netlist("L1 1 2 1\nC1 1 2 1\n"))
    assert g.B.shape == (2, 1) and g.A.shape == (2, 1)
    assert np.array_equal(g.A[:, 0], [1, -1]) or np.array_equal(g.A[:, 0], [-1, 1])


def test_disconnected_and_loopless_graphs_are_rejected():
    with pytest.raises(GraphError, match="disconnected"):
        build_graph(parse_netlist("L1 1 2 1\nC1 1 2 1\nL2 3 4 1\nC2 3 4 1\n"))
    with pytest.raises(GraphError, match="isolated"):
        build_graph(parse_netlist(".nodes 3\nL1 1 2 1\nC1 1 2 1\n"))
    with pytest.raises(GraphError, match="no loop"):
        build_graph(parse_netlist("L1 1 2 1\nC1 2 3 1\n"))


def test_tellegen_detects_bad_pairs():
    assert check_tellegen(B_REF, A_REF)
    assert not check_tellegen(B_REF, A_REF[:, :1])  # rank deficit
    bad = A_REF.copy()
    bad[0, 0] = -1
    assert not check_tellegen(B_REF, bad)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_graph_structure(seed):
    rng = np.random.default_rng(seed)
    n_nodes = int(rng.integers(2, 12))
    b = int(rng.integers(n_nodes, 21)) if n_nodes <= 20 else 20
    edges = random_edges(rng, n_nodes, b)
    g = build_graph(parse_netlist(graph_netlist(edges, n_nodes, rng)))
    assert g.b == g.m + g.n
    assert exact.rank(g.B) == g.n
    assert exact.rank(g.A) == g.m
    assert not np.any(exact.int_matmul(g.A.T, g.B))
    assert set(np.unique(g.A)) <= {-1, 0, 1}
