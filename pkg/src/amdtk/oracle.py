"""Brute-force elimination graphs.

Reference implementation used to verify the quotient-graph machinery: keeps
explicit neighbor sets, eliminates one vertex at a time, and clique-connects
the neighborhood. Costs do not matter here, being obviously right does.
"""

from __future__ import annotations

import numpy as np

from .matrixio import SparsePattern


class EliminationGraph:
    """Explicit undirected graph under vertex elimination."""

    def __init__(self, adjacency: list[set]):
        self.adj = adjacency
        self.live = set(range(len(adjacency)))

    @classmethod
    def from_pattern(cls, p: SparsePattern) -> "EliminationGraph":
        return cls([set(p.adjacency(v).tolist()) for v in range(p.n)])

    @property
    def n(self) -> int:
        return len(self.adj)

    def neighborhood(self, v: int) -> set:
        if v not in self.live:
            raise ValueError(f"vertex {v} already eliminated")
        return set(self.adj[v])

    def exact_degree(self, v: int) -> int:
        return len(self.neighborhood(v))

    def eliminate(self, v: int) -> int:
        """Remove v, clique-connect its neighbors. Returns fill edges added."""
        nbrs = self.neighborhood(v)
        fill = 0
        for u in nbrs:
            self.adj[u].discard(v)
        nlist = sorted(nbrs)
        for a_idx, a in enumerate(nlist):
            for b in nlist[a_idx + 1:]:
                if b not in self.adj[a]:
                    self.adj[a].add(b)
                    self.adj[b].add(a)
                    fill += 1
        self.adj[v] = set()
        self.live.discard(v)
        return fill


def minimum_degree_order(p: SparsePattern, tie_rule: str = "lowest-index") -> tuple[np.ndarray, int]:
    """Exact greedy minimum degree, ties broken by ``tie_rule``.

    Only "lowest-index" is supported; the argument exists so callers can
    state the rule explicitly. Returns (order, fill) where fill counts new
    undirected pairs created over the whole elimination.
    """
    if tie_rule != "lowest-index":
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    g = EliminationGraph.from_pattern(p)
    order = np.empty(p.n, dtype=np.int64)
    fill = 0
    for k in range(p.n):
        best = min(g.live, key=lambda v: (len(g.adj[v]), v))
        order[k] = best
        fill += g.eliminate(best)
    return order, fill


def fill_in_count(p: SparsePattern, order) -> int:
    """Fill (new undirected pairs) of eliminating ``order`` on pattern p."""
    order = np.asarray(order, dtype=np.int64)
    if len(order) != p.n or len(np.unique(order)) != p.n:
        raise ValueError("order must be a permutation of all vertices")
    g = EliminationGraph.from_pattern(p)
    return sum(g.eliminate(int(v)) for v in order)


def find_distance2_violation(g: EliminationGraph, pivots):
    """First witness that the pivot set is not distance-2 independent.

    Returns None when it is; otherwise (u, v, w) with pivots u, v and w the
    shared vertex: w is None when u and v are directly adjacent, else a
    common neighbor.
    """
    pivots = [int(v) for v in pivots]
    for v in pivots:
        if v not in g.live:
            raise ValueError(f"pivot {v} not live")
    pset = set(pivots)
    if len(pset) != len(pivots):
        dup = next(v for v in pivots if pivots.count(v) > 1)
        return dup, dup, None
    seen = {}
    for v in pivots:
        for u in g.adj[v]:
            if u in pset:
                return min(v, u), max(v, u), None
            if u in seen and seen[u] != v:
                return min(seen[u], v), max(seen[u], v), u
            seen[u] = v
    return None


def is_distance2_independent(g: EliminationGraph, pivots) -> bool:
    """True when all pairwise distances are >= 3 in the current graph.

    Equivalent: no two pivots adjacent, no two pivots sharing a neighbor.
    """
    return find_distance2_violation(g, pivots) is None
