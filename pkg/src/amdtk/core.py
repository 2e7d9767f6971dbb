"""Sequential approximate minimum degree on the quotient graph.

Per-pivot pipeline: pick the lowest-degree live representative (ties to the
lowest id), eliminate it through the quotient graph, merge indistinguishable
neighbors, recompute the element set-difference counters, then apply the
three-term approximate degree bound and move the affected variables between
degree buckets. Mass elimination follows from supervariable member chains:
eliminating a representative emits every original vertex merged into it,
consecutively.
"""

from __future__ import annotations

import time

import numpy as np
from numba import njit

from .matrixio import SparsePattern
from .quotient import (
    PivotRecord,
    PoolExhaustedError,
    QuotientGraph,
    _eliminate_pivot,
    _merge_scope,
    _reservation_bound,
    _setdiff_sizes,
    _update_degrees,
)
from .results import OrderingResult, StepInfo, TraceStep


class DegreeWorkspace:
    """Reusable per-element counters for set-difference computation.

    ``w`` holds |L_e minus L_p| for elements stamped in the current round;
    entries from stale rounds are ignored, so the arrays never need
    clearing. One workspace per thread of execution.
    """

    def __init__(self, n: int):
        self.n = n
        self.w = np.zeros(n, dtype=np.int64)
        self.wstamp = np.zeros(n, dtype=np.int64)
        self.wclock = 0

    def begin_round(self) -> int:
        self.wclock += 1
        return self.wclock


def compute_set_difference_sizes(g: QuotientGraph, rec: PivotRecord,
                                 ws: DegreeWorkspace) -> dict:
    """Weighted |L_e minus L_p| for every element adjacent to some v in L_p,
    the freshly created element excluded. Single pass, one counter per
    element, first touch seeds it with the stored weighted |L_e|."""
    touched = np.empty(g.n, dtype=np.int64)
    c = ws.begin_round()
    nt = _setdiff_sizes(g.pool, g.head, g.alen, g.elen, g.status, g.nv,
                        g.degree, rec.offset, rec.length, rec.pivot,
                        ws.w, ws.wstamp, c, touched)
    return {int(e): int(ws.w[e]) for e in touched[:nt]}


def update_approximate_degrees(g: QuotientGraph, rec: PivotRecord,
                               ws: DegreeWorkspace, k_after: int,
                               aggressive_absorption: bool = True) -> dict:
    """Apply the degree bound to every live v in L_p using the counters left
    by compute_set_difference_sizes (same workspace round). ``k_after``
    counts original vertices eliminated including this pivot's supervariable.
    Returns {v: new degree}; stores the degrees in the graph."""
    pairs = np.empty(2 * max(rec.length, 1), dtype=np.int64)
    cnt, _ = _update_degrees(g.pool, g.head, g.alen, g.elen, g.llen, g.status,
                             g.parent, g.nv, g.degree, rec.pivot, rec.offset,
                             rec.length, rec.weighted_size, rec.weight,
                             k_after, g.n, aggressive_absorption,
                             ws.w, ws.wstamp, ws.wclock, pairs)
    return {int(pairs[2 * i]): int(pairs[2 * i + 1]) for i in range(cnt)}


# -- degree buckets -------------------------------------------------------

@njit(nogil=True, cache=True)
def _dl_insert_all(dhead, dnext, dprev, dloc, degree, nv):
    mindeg = dhead.shape[0]
    for v in range(degree.shape[0]):
        if nv[v] <= 0:
            continue
        d = degree[v]
        q = dhead[d]
        dnext[v] = q
        dprev[v] = -1
        if q != -1:
            dprev[q] = v
        dhead[d] = v
        dloc[v] = d
        if d < mindeg:
            mindeg = d
    return mindeg


@njit(nogil=True, cache=True)
def _dl_unlink(dhead, dnext, dprev, dloc, v):
    d = dloc[v]
    nxt = dnext[v]
    prv = dprev[v]
    if prv != -1:
        dnext[prv] = nxt
    else:
        dhead[d] = nxt
    if nxt != -1:
        dprev[nxt] = prv
    dloc[v] = -1


@njit(nogil=True, cache=True)
def _dl_apply_pairs(dhead, dnext, dprev, dloc, pairs, cnt):
    dmin = dhead.shape[0]
    for i in range(cnt):
        v = pairs[2 * i]
        d = pairs[2 * i + 1]
        if dloc[v] != -1:
            _dl_unlink(dhead, dnext, dprev, dloc, v)
        q = dhead[d]
        dnext[v] = q
        dprev[v] = -1
        if q != -1:
            dprev[q] = v
        dhead[d] = v
        dloc[v] = d
        if d < dmin:
            dmin = d
    return dmin


@njit(nogil=True, cache=True)
def _dl_remove_ids(dhead, dnext, dprev, dloc, ids, cnt):
    for i in range(cnt):
        v = ids[i]
        if dloc[v] != -1:
            _dl_unlink(dhead, dnext, dprev, dloc, v)


@njit(nogil=True, cache=True)
def _dl_extract_min(dhead, dnext, dprev, dloc, start, n):
    d = start
    while d < n and dhead[d] == -1:
        d += 1
    if d >= n:
        return -1, d
    best = dhead[d]
    q = dnext[best]
    while q != -1:
        if q < best:
            best = q
        q = dnext[q]
    _dl_unlink(dhead, dnext, dprev, dloc, best)
    return best, d


class SequentialDegreeLists:
    """Doubly linked degree buckets with a minimum-degree cursor.

    Extraction scans the lowest nonempty bucket for the smallest vertex id,
    keeping tie-breaking deterministic regardless of insertion history.
    """

    def __init__(self, n: int):
        self.n = n
        self.dhead = np.full(n + 1, -1, dtype=np.int64)
        self.dnext = np.full(n, -1, dtype=np.int64)
        self.dprev = np.full(n, -1, dtype=np.int64)
        self.dloc = np.full(n, -1, dtype=np.int64)
        self.mindeg = n + 1

    @classmethod
    def from_graph(cls, g: QuotientGraph) -> "SequentialDegreeLists":
        lists = cls(g.n)
        lists.mindeg = int(_dl_insert_all(lists.dhead, lists.dnext, lists.dprev,
                                          lists.dloc, g.degree.astype(np.int64),
                                          g.nv.astype(np.int64)))
        return lists

    def insert(self, v: int, d: int):
        pairs = np.array([v, d], dtype=np.int64)
        dmin = _dl_apply_pairs(self.dhead, self.dnext, self.dprev, self.dloc, pairs, 1)
        self.mindeg = min(self.mindeg, int(dmin))

    def remove(self, v: int):
        ids = np.array([v], dtype=np.int64)
        _dl_remove_ids(self.dhead, self.dnext, self.dprev, self.dloc, ids, 1)

    def extract_min(self) -> int:
        """Lowest-degree live vertex, smallest id on ties; -1 when empty."""
        v, d = _dl_extract_min(self.dhead, self.dnext, self.dprev, self.dloc,
                               min(self.mindeg, self.n), self.n + 1)
        self.mindeg = int(d)
        return int(v)


# -- driver ---------------------------------------------------------------

def sequential_amd(pattern: SparsePattern, *, augmentation: float = 1.5,
                   aggressive_absorption: bool = True, index_dtype=np.int64,
                   on_step=None, collect_trace: bool = False) -> OrderingResult:
    """Order all vertices of a symmetric pattern by approximate minimum
    degree. Returns the elimination order plus run statistics; fill_edges is
    the exact undirected fill of that order."""
    t_start = time.perf_counter()
    n = pattern.n
    g = QuotientGraph.init_from_pattern(pattern, augmentation=augmentation,
                                        index_dtype=index_dtype)
    ws = DegreeWorkspace(n)
    lists = SequentialDegreeLists.from_graph(g)
    dt = g.pool.dtype
    touched = np.empty(max(n, 1), dtype=np.int64)
    pairs = np.empty(2 * max(n, 1), dtype=np.int64)
    merged_buf = np.empty(max(n, 1), dtype=np.int64)
    one_pivot = np.empty(1, dtype=dt)

    order = np.empty(n, dtype=np.int64)
    pos = 0
    k = 0
    colsum = 0
    merges = 0
    absorptions = 0
    step_pivots: list[int] = []
    step_originals: list[int] = []
    step_seconds: list[float] = []
    trace: list[TraceStep] | None = [] if collect_trace else None
    sel_time = 0.0
    elim_time = 0.0
    step = 0

    while k < n:
        t0 = time.perf_counter()
        p = lists.extract_min()
        if p < 0:
            raise AssertionError("degree lists empty with vertices remaining")
        t1 = time.perf_counter()
        sel_time += t1 - t0

        one_pivot[0] = p
        bound = int(_reservation_bound(g.pool, g.head, g.alen, g.elen, g.llen,
                                       g.status, one_pivot))
        try:
            res = g.reserve_pool(bound)
        except PoolExhaustedError:
            g.garbage_collect()
            res = g.reserve_pool(bound)

        g._mclock[0] += 1
        cnt, lpd, w_p = _eliminate_pivot(
            g.pool, g.head, g.alen, g.elen, g.llen, g.status, g.parent, g.nv,
            g.degree, p, res.offset, g._mark, g._mclock[0])
        cnt, lpd, w_p = int(cnt), int(lpd), int(w_p)
        g.surrender_tail(res, cnt)

        nm = int(_merge_scope(g.pool, g.head, g.alen, g.elen, g.llen, g.status,
                              g.parent, g.nv, g.degree, g.member_next,
                              g.member_tail, g._mark, g._mclock,
                              res.offset, cnt, p, merged_buf))
        if nm:
            _dl_remove_ids(lists.dhead, lists.dnext, lists.dprev, lists.dloc,
                           merged_buf, nm)
            merges += nm

        k_after = k + w_p
        c = ws.begin_round()
        _setdiff_sizes(g.pool, g.head, g.alen, g.elen, g.status, g.nv, g.degree,
                       res.offset, cnt, p, ws.w, ws.wstamp, c, touched)
        ucnt, nabs = _update_degrees(
            g.pool, g.head, g.alen, g.elen, g.llen, g.status, g.parent, g.nv,
            g.degree, p, res.offset, cnt, lpd, w_p, k_after, n,
            aggressive_absorption, ws.w, ws.wstamp, c, pairs)
        absorptions += int(nabs)
        if ucnt:
            dmin = int(_dl_apply_pairs(lists.dhead, lists.dnext, lists.dprev,
                                       lists.dloc, pairs, ucnt))
            lists.mindeg = min(lists.mindeg, dmin)

        start = pos
        cur = p
        while cur != -1:
            order[pos] = cur
            pos += 1
            cur = int(g.member_next[cur])
        if pos - start != w_p:
            raise AssertionError("member chain length disagrees with weight")
        colsum += w_p * lpd + (w_p * (w_p - 1)) // 2
        k = k_after

        t2 = time.perf_counter()
        elim_time += t2 - t1
        step_pivots.append(1)
        step_originals.append(w_p)
        step_seconds.append(t2 - t0)
        if trace is not None:
            trace.append(TraceStep(np.array([p], dtype=np.int64), start, pos))
        if on_step is not None:
            on_step(StepInfo(step=step, pivots=np.array([p], dtype=np.int64),
                             emitted=order[start:pos].copy(),
                             k_before=k_after - w_p, k_after=k_after, graph=g))
        step += 1

    fill = colsum - pattern.nnz_offdiag // 2
    return OrderingResult(
        order=order, mode="sequential", n=n, nnz_offdiag=pattern.nnz_offdiag,
        workers=1, elapsed=time.perf_counter() - t_start, fill_edges=fill,
        peak_pool=g.peak_pool, pool_capacity=g.capacity,
        step_pivots=np.asarray(step_pivots, dtype=np.int64),
        step_originals=np.asarray(step_originals, dtype=np.int64),
        step_seconds=np.asarray(step_seconds, dtype=np.float64),
        phase_seconds={"selection": sel_time, "elimination": elim_time},
        merges=merges, absorptions=absorptions,
        config={"augmentation": augmentation,
                "aggressive_absorption": aggressive_absorption},
        trace=trace)
