"""Oriented circuit graph: incidence matrix, fundamental loop matrix."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from birknet import exact
from birknet.netlist import NetlistDoc


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitGraph:
    b: int
    n: int
    m: int
    B: np.ndarray  # b x n, entries 0/+1/-1
    A: np.ndarray  # b x m, entries 0/+1/-1
    spanning_tree: frozenset
    node_columns: tuple  # node index for each column of B

    def summary(self) -> dict:
        return {
            "b": self.b,
            "n": self.n,
            "m": self.m,
            "rank_B": exact.rank(self.B),
            "rank_A": exact.rank(self.A),
            "tellegen": check_tellegen(self.B, self.A),
        }


def _adjacency(doc: NetlistDoc) -> dict[int, list[tuple[int, int]]]:
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(1, doc.node_count + 1)}
    for l, br in enumerate(doc.branches):
        adj[br.from_node].append((l, br.to_node))
        adj[br.to_node].append((l, br.from_node))
    return adj


def _check_connected(doc: NetlistDoc) -> None:
    if not 1 <= doc.reference_node <= doc.node_count:
        raise GraphError(f"reference node {doc.reference_node} out of range 1..{doc.node_count}")
    adj = _adjacency(doc)
    isolated = [v for v, nbrs in adj.items() if not nbrs]
    if isolated:
        raise GraphError(f"isolated node(s): {', '.join(map(str, isolated))}")
    seen = {1}
    todo = [1]
    while todo:
        v = todo.pop()
        for _, w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    if len(seen) != doc.node_count:
        missing = sorted(set(adj) - seen)
        raise GraphError(f"graph is disconnected; unreachable from node 1: {missing}")


def build_incidence(doc: NetlistDoc) -> np.ndarray:
    """b x n incidence matrix: +1 where a branch leaves a node, -1 where it enters."""
    _check_connected(doc)
    columns = [v for v in range(1, doc.node_count + 1) if v != doc.reference_node]
    col = {v: j for j, v in enumerate(columns)}
    B = np.zeros((doc.b, len(columns)), dtype=np.int64)
    for l, br in enumerate(doc.branches):
        if br.from_node in col:
            B[l, col[br.from_node]] = 1
        if br.to_node in col:
            B[l, col[br.to_node]] = -1
    return B


def _bfs_tree(doc: NetlistDoc):
    adj = _adjacency(doc)
    parent: dict[int, tuple[int, int] | None] = {1: None}  # node -> (branch, parent node)
    depth = {1: 0}
    queue = deque([1])
    tree = []
    while queue:
        v = queue.popleft()
        for l, w in sorted(adj[v]):
            if w not in parent:
                parent[w] = (l, v)
                depth[w] = depth[v] + 1
                tree.append(l)
                queue.append(w)
    return parent, depth, frozenset(tree)


def build_loop_matrix(doc: NetlistDoc) -> tuple[np.ndarray, frozenset]:
    """Fundamental cycles of a BFS spanning tree rooted at node 1.

    Column j follows co-tree branch j (in branch order) from its tail to
    its head and closes through the tree; entries are +1 where a branch is
    traversed along its orientation and -1 against it.
    """
    _check_connected(doc)
    parent, depth, tree = _bfs_tree(doc)
    cotree = [l for l in range(doc.b) if l not in tree]
    A = np.zeros((doc.b, len(cotree)), dtype=np.int64)
    for j, e in enumerate(cotree):
        br = doc.branches[e]
        A[e, j] = 1
        # walk head -> ... -> tail through the tree
        u, v = br.to_node, br.from_node
        up: list[tuple[int, int]] = []  # (branch, node we leave) from u upwards
        down: list[tuple[int, int]] = []  # from v upwards, reversed later
        while u != v:
            if depth[u] >= depth[v]:
                l, pu = parent[u]
                up.append((l, u))
                u = pu
            else:
                l, pv = parent[v]
                down.append((l, pv))
                v = pv
        for l, leaving in up:
            A[l, j] = 1 if doc.branches[l].from_node == leaving else -1
        for l, leaving in down:
            A[l, j] = 1 if doc.branches[l].from_node == leaving else -1
    return A, tree


def build_graph(doc: NetlistDoc) -> CircuitGraph:
    B = build_incidence(doc)
    A, tree = build_loop_matrix(doc)
    b, n = B.shape
    m = A.shape[1]
    if m == 0:
        raise GraphError("the network has no loop (m = 0)")
    columns = tuple(v for v in range(1, doc.node_count + 1) if v != doc.reference_node)
    return CircuitGraph(b=b, n=n, m=m, B=B, A=A, spanning_tree=tree, node_columns=columns)


def check_tellegen(B, A) -> bool:
    """A^T B == 0 exactly and rank(B) + rank(A) == b."""
    B = np.asarray(B, dtype=np.int64)
    A = np.asarray(A, dtype=np.int64)
    if B.shape[0] != A.shape[0]:
        return False
    if np.any(exact.int_matmul(A.T, B) != 0):
        return False
    return exact.rank(B) + exact.rank(A) == B.shape[0]
