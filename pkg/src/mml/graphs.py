"""Labeled undirected graphs with a canonical edge enumeration.

Vertices are 1-based in every external format; edges are normalized to
(i, j) with i < j and sorted lexicographically, so the edge numbering
1..m is identical across runs and machines.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

__all__ = ["Graph", "make_graph", "standard_graph", "enumerate_graphs"]


@dataclass(frozen=True)
class Graph:
    """Immutable graph on vertices 1..d with lexicographically indexed edges."""

    d: int
    edges: tuple[tuple[int, int], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {e: k + 1 for k, e in enumerate(self.edges)}
        object.__setattr__(self, "_index", index)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_index(self, i: int, j: int) -> int:
        """1-based position of edge {i, j} in the canonical enumeration."""
        key = (i, j) if i < j else (j, i)
        return self._index[key]

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        return key in self._index

    def to_json(self) -> dict:
        return {"d": self.d, "edges": [[i, j] for i, j in self.edges]}

    @staticmethod
    def from_json(obj: dict) -> "Graph":
        return make_graph(obj["d"], obj["edges"])


def make_graph(d: int, pairs) -> Graph:
    """Validate and normalize an edge list into a Graph.

    Rejects self-loops, out-of-range vertices and duplicate edges; edges are
    sorted lexicographically before indexing.
    """
    if d < 1:
        raise ValueError(f"vertex count must be positive, got {d}")
    normalized = []
    for pair in pairs:
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) not allowed")
        if i > j:
            i, j = j, i
        if not (1 <= i < j <= d):
            raise ValueError(f"edge ({i}, {j}) out of range for d={d}")
        normalized.append((i, j))
    edges = tuple(sorted(normalized))
    if len(set(edges)) != len(edges):
        raise ValueError("duplicate edges not allowed")
    return Graph(d, edges)


def standard_graph(kind: str, d: int) -> Graph:
    """Canonical edge set for one of: path, cycle, complete, star, empty."""
    if d < 1:
        raise ValueError(f"vertex count must be positive, got {d}")
    if kind == "path":
        pairs = [(i, i + 1) for i in range(1, d)]
    elif kind == "cycle":
        if d < 3:
            raise ValueError("cycle requires d >= 3")
        pairs = [(i, i + 1) for i in range(1, d)] + [(1, d)]
    elif kind == "complete":
        pairs = list(itertools.combinations(range(1, d + 1), 2))
    elif kind == "star":
        pairs = [(1, i) for i in range(2, d + 1)]
    elif kind == "empty":
        pairs = []
    else:
        raise ValueError(f"unknown graph kind {kind!r}")
    return make_graph(d, pairs)


def enumerate_graphs(d: int, m: int, cap: int = 10**6):
    """All labeled graphs on [d] with exactly m edges, in deterministic order.

    The order is that of itertools.combinations over the lexicographic list
    of candidate edges.  Guarded by a cap on the number of graphs.
    """
    if m < 0:
        raise ValueError("edge count must be nonnegative")
    max_m = d * (d - 1) // 2
    if m > max_m:
        raise ValueError(f"m={m} exceeds d(d-1)/2={max_m}")
    count = math.comb(max_m, m)
    if count > cap:
        raise ValueError(f"{count} graphs exceed the cap {cap}")
    all_pairs = list(itertools.combinations(range(1, d + 1), 2))
    return [Graph(d, subset) for subset in itertools.combinations(all_pairs, m)]
