"""Communication graph and neighborhood queries.

Nodes are indexed from 0 internally. Scenario files and printed output use
1-based labels, so node ``k`` is shown as ``k + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedGraph, DuplicateEdge, IndexOutOfRange, SelfLoop

# Two triangles {1,2,3} and {5,6,7} bridged by node 4, which links to all six.
DEFAULT_EDGES_LABELS = (
    (1, 2), (1, 3), (2, 3),
    (5, 6), (5, 7), (6, 7),
    (4, 1), (4, 2), (4, 3), (4, 5), (4, 6), (4, 7),
)


@dataclass(frozen=True)
class Topology:
    """Undirected, connected graph without self loops.

    Build instances with :func:`build_topology`; the constructor does not
    validate.
    """

    n_nodes: int
    edges: frozenset
    _adjacency: np.ndarray = field(repr=False, compare=False)

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean ``(N, N)`` adjacency, no diagonal."""
        return self._adjacency.copy()

    @property
    def neighborhood_mask(self) -> np.ndarray:
        """Boolean ``(N, N)`` mask of self-inclusive neighborhoods."""
        return self._adjacency | np.eye(self.n_nodes, dtype=bool)

    def degree(self, k: int) -> int:
        """Number of neighbors of ``k`` excluding itself."""
        _check_index(self, k)
        return int(self._adjacency[k].sum())

    def edge_labels(self) -> list[list[int]]:
        """Edges as sorted 1-based label pairs, for serialization."""
        return [[i + 1, j + 1] for i, j in sorted(self.edges)]


def _check_index(t: Topology, k: int) -> None:
    if not 0 <= k < t.n_nodes:
        raise IndexOutOfRange(f"node index {k} outside [0, {t.n_nodes})")


def build_topology(n_nodes: int, edges: Iterable[Sequence[int]]) -> Topology:
    """Validate an edge list and return a :class:`Topology`.

    ``edges`` holds 0-based index pairs. Raises ``IndexOutOfRange``,
    ``SelfLoop``, ``DuplicateEdge`` or ``DisconnectedGraph``.
    """
    if int(n_nodes) != n_nodes or n_nodes < 1:
        raise IndexOutOfRange(f"n_nodes must be a positive integer, got {n_nodes!r}")
    n_nodes = int(n_nodes)
    seen = set()
    adjacency = np.zeros((n_nodes, n_nodes), dtype=bool)
    for pair in edges:
        i, j = (int(v) for v in pair)
        for v in (i, j):
            if not 0 <= v < n_nodes:
                raise IndexOutOfRange(f"edge ({i}, {j}) references node {v} outside [0, {n_nodes})")
        if i == j:
            raise SelfLoop(f"self loop on node {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {key}")
        seen.add(key)
        adjacency[i, j] = adjacency[j, i] = True

    n_comp, _ = connected_components(csr_matrix(adjacency), directed=False)
    if n_comp != 1:
        raise DisconnectedGraph(f"graph has {n_comp} connected components")
    adjacency.setflags(write=False)
    return Topology(n_nodes, frozenset(seen), adjacency)


def from_labels(n_nodes: int, edges: Iterable[Sequence[int]]) -> Topology:
    """Like :func:`build_topology` but with 1-based edge labels."""
    return build_topology(n_nodes, [(int(i) - 1, int(j) - 1) for i, j in edges])


def default_topology() -> Topology:
    return from_labels(7, DEFAULT_EDGES_LABELS)


def neighbors(t: Topology, k: int, include_self: bool = True) -> list[int]:
    """Ascending neighbor indices of ``k``, with or without ``k`` itself."""
    _check_index(t, k)
    row = t._adjacency[k].copy()
    if include_self:
        row[k] = True
    return [int(v) for v in np.flatnonzero(row)]
