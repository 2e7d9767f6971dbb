"""Shared builders and small brute-force references for the test suite."""

import numpy as np

from amdtk.matrixio import SparsePattern
from amdtk.oracle import EliminationGraph
from amdtk.quotient import VAR


def pattern_from_edges(n, edges):
    """SparsePattern from an undirected edge list (0-based, no dups needed)."""
    rows = []
    cols = []
    for u, v in edges:
        rows += [u, v]
        cols += [v, u]
    indptr = np.zeros(n + 1, dtype=np.int64)
    if not rows:
        return SparsePattern(n=n, indptr=indptr, indices=np.empty(0, np.int64))
    keys = np.unique(np.array(rows, np.int64) * n + np.array(cols, np.int64))
    rr = keys // n
    cc = keys - rr * n
    np.add.at(indptr, rr + 1, 1)
    np.cumsum(indptr, out=indptr)
    return SparsePattern(n=n, indptr=indptr, indices=cc)


def neighbors_after(pattern, eliminated, v):
    """N(v) in the elimination graph after eliminating a vertex set.

    Order-free: u is a neighbor iff an edge exists or some path runs through
    eliminated vertices only. BFS through the eliminated set.
    """
    elim = set(eliminated)
    seen = {v}
    out = set()
    stack = [v]
    while stack:
        u = stack.pop()
        for w in pattern.adjacency(u):
            w = int(w)
            if w in seen:
                continue
            seen.add(w)
            if w in elim:
                stack.append(w)
            else:
                out.add(w)
    return out


def exhaustive_min_fill(pattern):
    """Minimum fill over all n! orders, by DP over eliminated subsets.

    Usable for n up to ~14. The elimination-graph state depends only on the
    eliminated set, so fill decomposes over subset lattice paths.
    """
    n = pattern.n
    full = 1 << n

    def fill_cost(subset_verts, v):
        nb = neighbors_after(pattern, subset_verts, v)
        missing = 0
        for u in nb:
            un = neighbors_after(pattern, subset_verts, u)
            for w in nb:
                if w > u and w not in un:
                    missing += 1
        return missing

    best = np.full(full, np.iinfo(np.int64).max, dtype=np.int64)
    best[0] = 0
    order = sorted(range(full), key=lambda s: bin(s).count("1"))
    for s in order:
        if best[s] == np.iinfo(np.int64).max:
            continue
        verts = [i for i in range(n) if s >> i & 1]
        for v in range(n):
            if s >> v & 1:
                continue
            cost = best[s] + fill_cost(verts, v)
            t = s | (1 << v)
            if cost < best[t]:
                best[t] = cost
    return int(best[full - 1])


def live_representatives(g):
    return [v for v in range(g.n) if g.status[v] == VAR]


def expanded_neighborhood(g, v):
    """reconstruct_neighborhood with supervariables expanded to originals."""
    out = set()
    for rep in g.reconstruct_neighborhood(v):
        out.update(int(m) for m in g.members(int(rep)))
    return out


def oracle_external_neighbors(mirror: EliminationGraph, g, v):
    """Oracle N(v) minus v's own merged twins (the quotient's view)."""
    own = set(int(m) for m in g.members(v))
    own.discard(v)
    return mirror.adj[v] - own


def quotient_oracle_replay(pattern, pivot_seq, *, merge=True, on_state=None):
    """Drive QuotientGraph and EliminationGraph through the same pivots.

    pivot_seq lists original vertices; entries that are dead or merged by
    the time they come up are skipped. After every elimination (and merge,
    when enabled) calls on_state(g, mirror, rec, k).
    Returns the number of pivots actually eliminated.
    """
    from amdtk.quotient import QuotientGraph

    g = QuotientGraph.init_from_pattern(pattern)
    mirror = EliminationGraph.from_pattern(pattern)
    k = 0
    for p in pivot_seq:
        p = int(p)
        if g.status[p] != VAR:
            continue
        members = [int(m) for m in g.members(p)]
        rec = g.eliminate_pivot(p)
        if merge:
            g.merge_indistinguishable(rec)
        for m in members:
            mirror.eliminate(m)
        k += len(members)
        if on_state is not None:
            on_state(g, mirror, rec, k)
    return k
