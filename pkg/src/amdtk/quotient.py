"""Quotient-graph representation of partially eliminated matrices.

Variables (uneliminated supervariables) keep a list A_v of variable
neighbors and a list E_v of adjacent elements; an element e (eliminated
pivot) keeps the variable list L_e it covers. The elimination-graph
neighborhood of v is (A_v union of L_e over e in E_v) minus v, so cliques
are never materialized.

Storage is one pooled index array with per-node offset/length splitters.
Lists are only rewritten by their owner; dead entries (merged variables,
absorbed elements) are skipped on read and dropped on the next rewrite.
Eliminating a pivot rewrites each neighbor's lists strictly in place, which
works because |A_v| + |E_v| never grows: membership in L_p removes at least
one A entry (the pivot) or one E entry (an absorbed element) before p is
appended.

Weight bookkeeping: nv holds supervariable weights, zeroed on merge or
elimination; an element's ``degree`` slot stores its weighted |L_e| at
creation. Merging moves weight between two ids that sit in exactly the same
lists, so stored element sizes stay exact without rewrites.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._atomics import mix64
from .matrixio import SparsePattern

# node status codes
VAR = 0
ELEM = 1
MERGED = 2
DEAD = 3


class PoolExhaustedError(RuntimeError):
    """Pool cannot grant a reservation. Sequential callers should garbage
    collect and retry; parallel runs abort and restart with more elbow room."""

    def __init__(self, needed: int, capacity: int):
        self.needed = needed
        self.capacity = capacity
        super().__init__(f"pool exhausted: need {needed} slots, capacity {capacity}")


@dataclass(frozen=True)
class PoolReservation:
    offset: int
    length: int


@dataclass(frozen=True)
class PivotRecord:
    """Where an eliminated pivot's L_p list landed, plus its sizes."""

    pivot: int
    offset: int
    length: int          # live representatives listed
    weighted_size: int   # sum of their supervariable weights
    weight: int          # supervariable weight of the pivot itself


@njit(nogil=True, cache=True)
def _reconstruct(pool, head, alen, elen, llen, status, nv, v, mark, c, out):
    """Read-only neighborhood of live variable v into out; returns count."""
    mark[v] = c
    cnt = 0
    b = head[v]
    for i in range(b, b + alen[v]):
        x = pool[i]
        if nv[x] > 0 and mark[x] != c:
            mark[x] = c
            out[cnt] = x
            cnt += 1
    eb = b + alen[v]
    for i in range(eb, eb + elen[v]):
        e = pool[i]
        if status[e] != ELEM:
            continue
        lb = head[e]
        for j in range(lb, lb + llen[e]):
            x = pool[j]
            if nv[x] > 0 and mark[x] != c:
                mark[x] = c
                out[cnt] = x
                cnt += 1
    return cnt


@njit(nogil=True, cache=True)
def _reservation_bound(pool, head, alen, elen, llen, status, pivots):
    """Upper bound on the total L_p storage the given pivots can need."""
    total = 0
    for t in range(pivots.shape[0]):
        p = pivots[t]
        total += alen[p]
        b = head[p] + alen[p]
        for i in range(b, b + elen[p]):
            e = pool[i]
            if status[e] == ELEM:
                total += llen[e]
    return total


@njit(nogil=True, cache=True)
def _eliminate_pivot(pool, head, alen, elen, llen, status, parent, nv, degree,
                     p, dest, mark, c):
    """Turn live variable p into an element with L_p written at dest.

    Absorbs every element adjacent to p, then rewrites each neighbor's
    A/E lists in place: A entries covered by L_p + {p} and dead E entries
    drop out, p is appended to E. Returns (count, weighted_size, weight).
    """
    w_p = nv[p]
    mark[p] = c
    cnt = 0
    lpd = 0
    base = head[p]
    for i in range(base, base + alen[p]):
        x = pool[i]
        if nv[x] > 0 and mark[x] != c:
            mark[x] = c
            pool[dest + cnt] = x
            cnt += 1
            lpd += nv[x]
    eb = base + alen[p]
    for i in range(eb, eb + elen[p]):
        e = pool[i]
        if status[e] != ELEM:
            continue
        lb = head[e]
        for j in range(lb, lb + llen[e]):
            x = pool[j]
            if x != p and nv[x] > 0 and mark[x] != c:
                mark[x] = c
                pool[dest + cnt] = x
                cnt += 1
                lpd += nv[x]
        status[e] = DEAD
        parent[e] = p
        llen[e] = 0
    nv[p] = 0
    head[p] = dest
    llen[p] = cnt
    alen[p] = 0
    elen[p] = 0
    degree[p] = lpd
    status[p] = ELEM if cnt > 0 else DEAD
    if cnt == 0:
        llen[p] = 0

    for i in range(dest, dest + cnt):
        v = pool[i]
        b = head[v]
        na = 0
        for j in range(b, b + alen[v]):
            x = pool[j]
            if nv[x] > 0 and mark[x] != c:
                pool[b + na] = x
                na += 1
        ne = 0
        eb0 = b + alen[v]
        wb = b + na
        for j in range(eb0, eb0 + elen[v]):
            e = pool[j]
            if status[e] == ELEM:
                pool[wb + ne] = e
                ne += 1
        pool[wb + ne] = p
        ne += 1
        alen[v] = na
        elen[v] = ne
    return cnt, lpd, w_p


@njit(nogil=True, cache=True)
def _lists_equal(pool, head, alen, elen, status, mark, c, u, v):
    """Raw id-set equality of (A | live E) for u and v, ignoring each other."""
    cu = 0
    b = head[u]
    for j in range(b, b + alen[u]):
        x = pool[j]
        if x == v:
            continue
        mark[x] = c
        cu += 1
    eb = b + alen[u]
    for j in range(eb, eb + elen[u]):
        e = pool[j]
        if status[e] == ELEM:
            mark[e] = c
            cu += 1
    cv = 0
    b = head[v]
    for j in range(b, b + alen[v]):
        x = pool[j]
        if x == u:
            continue
        if mark[x] != c:
            return False
        cv += 1
    eb = b + alen[v]
    for j in range(eb, eb + elen[v]):
        e = pool[j]
        if status[e] == ELEM:
            if mark[e] != c:
                return False
            cv += 1
    return cu == cv


@njit(nogil=True, cache=True)
def _merge_scope(pool, head, alen, elen, llen, status, parent, nv, degree,
                 member_next, member_tail, mark, clock_box, lp_off, lp_cnt, p,
                 merged_out):
    """Merge indistinguishable variables inside one L_p scope.

    Hashes raw stored lists (scope members excluded so mutually adjacent
    twins still collide), then verifies with an exact comparison that only
    ignores the candidate pair itself. The lower id survives; weights move
    to it and the loser joins its member chain. Approximate degrees of
    survivors are left untouched. Returns the number of merges; merged_out
    receives the dying ids.
    """
    c_scope = clock_box[0] + 1
    mark[p] = c_scope
    live = 0
    for i in range(lp_off, lp_off + lp_cnt):
        v = pool[i]
        if nv[v] > 0:
            mark[v] = c_scope
            live += 1
    if live <= 1:
        clock_box[0] = c_scope
        return 0
    bhead = np.full(live, -1, np.int64)
    bnext = np.empty(live, np.int64)
    bvert = np.empty(live, np.int64)
    bhash = np.empty(live, np.uint64)
    m = 0
    nmerged = 0
    clock = c_scope
    for i in range(lp_off, lp_off + lp_cnt):
        v = pool[i]
        if nv[v] <= 0:
            continue
        h = np.uint64(0)
        b = head[v]
        for j in range(b, b + alen[v]):
            x = pool[j]
            if mark[x] != c_scope:
                h += mix64(np.uint64(x))
        eb = b + alen[v]
        for j in range(eb, eb + elen[v]):
            e = pool[j]
            if status[e] == ELEM:
                h += mix64(np.uint64(e))
        slot = np.int64(h % np.uint64(live))
        q = bhead[slot]
        died = False
        while q != -1:
            u = bvert[q]
            if nv[u] > 0 and bhash[q] == h:
                clock += 1
                if _lists_equal(pool, head, alen, elen, status, mark, clock, u, v):
                    rep = u if u < v else v
                    loser = v if rep == u else u
                    nv[rep] += nv[loser]
                    nv[loser] = 0
                    status[loser] = MERGED
                    parent[loser] = rep
                    alen[loser] = 0
                    elen[loser] = 0
                    member_next[member_tail[rep]] = loser
                    member_tail[rep] = member_tail[loser]
                    merged_out[nmerged] = loser
                    nmerged += 1
                    died = rep != v
                    break
            q = bnext[q]
        if not died:
            bvert[m] = v
            bhash[m] = h
            bnext[m] = bhead[slot]
            bhead[slot] = m
            m += 1
    clock_box[0] = clock
    return nmerged


@njit(nogil=True, cache=True)
def _setdiff_sizes(pool, head, alen, elen, status, nv, degree, lp_off, lp_cnt,
                   p, w, wstamp, c, touched):
    """Algorithm-style element counters: after the scan, for every touched
    element e, w[e] = weighted |L_e minus L_p|. Returns touched count."""
    nt = 0
    for i in range(lp_off, lp_off + lp_cnt):
        v = pool[i]
        wv = nv[v]
        if wv <= 0:
            continue
        b = head[v] + alen[v]
        for j in range(b, b + elen[v]):
            e = pool[j]
            if e == p or status[e] != ELEM:
                continue
            if wstamp[e] != c:
                wstamp[e] = c
                w[e] = degree[e]
                touched[nt] = e
                nt += 1
            w[e] -= wv
    return nt


@njit(nogil=True, cache=True)
def _update_degrees(pool, head, alen, elen, llen, status, parent, nv, degree,
                    p, lp_off, lp_cnt, lpd, w_p, k_after, n, aggressive,
                    w, wstamp, c, out_pairs):
    """Three-term approximate degree bound for every live v in L_p.

    d_v = min(live_after - nv(v),
              d_old - nv(p) + |L_p \\ vbar|,
              |A_v| + |L_p \\ vbar| + sum of |L_e \\ L_p|)
    with every set size weighted by supervariable counts and external
    (own supervariable excluded). Elements whose difference is zero are
    fully covered by the new one and get absorbed when aggressive is set.
    Returns (updated count, absorptions); out_pairs holds (v, d) pairs.
    """
    cnt = 0
    nabs = 0
    for i in range(lp_off, lp_off + lp_cnt):
        v = pool[i]
        wv = nv[v]
        if wv <= 0:
            continue
        b = head[v]
        a_ext = 0
        for j in range(b, b + alen[v]):
            a_ext += nv[pool[j]]
        esum = 0
        eb = b + alen[v]
        for j in range(eb, eb + elen[v]):
            e = pool[j]
            if e == p or status[e] != ELEM:
                continue
            diff = w[e] if wstamp[e] == c else degree[e]
            if diff == 0 and aggressive:
                status[e] = DEAD
                parent[e] = p
                llen[e] = 0
                nabs += 1
            else:
                esum += diff
        lp_ext = lpd - wv
        d = n - k_after - wv
        d2 = degree[v] - w_p + lp_ext
        if d2 < d:
            d = d2
        d3 = a_ext + lp_ext + esum
        if d3 < d:
            d = d3
        if d < 0:
            d = 0
        degree[v] = d
        out_pairs[2 * cnt] = v
        out_pairs[2 * cnt + 1] = d
        cnt += 1
    return cnt, nabs


@njit(nogil=True, cache=True)
def _gc_compact(pool, head, extents, order):
    """Slide live regions to the front, ascending by offset. Returns new top."""
    top = 0
    for t in range(order.shape[0]):
        node = order[t]
        ext = extents[node]
        src = head[node]
        if src != top:
            for i in range(ext):
                pool[top + i] = pool[src + i]
        head[node] = top
        top += ext
    return top


class QuotientGraph:
    """Pooled quotient-graph state plus single-threaded convenience ops.

    The parallel driver bypasses the methods and feeds the same kernels
    per-worker scratch; these methods exist for the sequential path, tests,
    and interactive poking.
    """

    def __init__(self, n: int, capacity: int, index_dtype=np.int64):
        self.n = n
        self.capacity = capacity
        dt = np.dtype(index_dtype)
        if dt not in (np.dtype(np.int32), np.dtype(np.int64)):
            raise ValueError("index_dtype must be int32 or int64")
        if dt == np.dtype(np.int32) and capacity >= 2 ** 31:
            raise ValueError("int32 indices cannot address this pool")
        self.pool = np.zeros(capacity, dtype=dt)
        self.head = np.zeros(n, dtype=dt)
        self.alen = np.zeros(n, dtype=dt)
        self.elen = np.zeros(n, dtype=dt)
        self.llen = np.zeros(n, dtype=dt)
        self.status = np.zeros(n, dtype=np.int8)
        self.parent = np.full(n, -1, dtype=dt)
        self.nv = np.ones(n, dtype=dt)
        self.degree = np.zeros(n, dtype=dt)
        self.member_next = np.full(n, -1, dtype=dt)
        self.member_tail = np.arange(n, dtype=dt)
        self.pool_top = 0
        self.peak_pool = 0
        self._lock = threading.Lock()
        # single-threaded scratch
        self._mark = np.zeros(n, dtype=np.int64)
        self._mclock = np.zeros(1, dtype=np.int64)
        self._nbuf = np.empty(n, dtype=dt)

    @classmethod
    def init_from_pattern(cls, pattern: SparsePattern, augmentation: float = 1.5,
                          index_dtype=np.int64) -> "QuotientGraph":
        """Build the initial all-variables graph with elbow room.

        Pool capacity is ceil((1 + augmentation) * nnz_offdiag) + n.
        """
        if augmentation < 0:
            raise ValueError("augmentation must be nonnegative")
        n = pattern.n
        nnz = pattern.nnz_offdiag
        capacity = math.ceil((1.0 + augmentation) * nnz) + n
        g = cls(n, capacity, index_dtype=index_dtype)
        g.pool[:nnz] = pattern.indices
        g.head[:] = pattern.indptr[:-1]
        g.alen[:] = np.diff(pattern.indptr)
        g.degree[:] = g.alen
        g.pool_top = nnz
        g.peak_pool = nnz
        return g

    # -- pool ------------------------------------------------------------

    def reserve_pool(self, size: int) -> PoolReservation:
        """Thread-safe bump allocation; raises PoolExhaustedError when full."""
        with self._lock:
            if self.pool_top + size > self.capacity:
                raise PoolExhaustedError(self.pool_top + size, self.capacity)
            offset = self.pool_top
            self.pool_top += size
            if self.pool_top > self.peak_pool:
                self.peak_pool = self.pool_top
            return PoolReservation(offset, size)

    def surrender_tail(self, reservation: PoolReservation, used: int):
        """Return the unused tail of the latest grant (sequential mode only)."""
        with self._lock:
            if self.pool_top == reservation.offset + reservation.length:
                self.pool_top = reservation.offset + used

    def garbage_collect(self) -> int:
        """Compact live storage to the pool front. Single-threaded only.
        Returns the number of slots freed."""
        extents = self.alen + self.elen + self.llen
        nodes = np.nonzero(extents > 0)[0]
        order = nodes[np.argsort(self.head[nodes], kind="stable")]
        new_top = int(_gc_compact(self.pool, self.head,
                                  extents.astype(self.pool.dtype), order.astype(self.pool.dtype)))
        freed = self.pool_top - new_top
        self.pool_top = new_top
        return freed

    # -- queries ----------------------------------------------------------

    def is_live_variable(self, v: int) -> bool:
        return self.status[v] == VAR and self.nv[v] > 0

    def live_variables(self) -> np.ndarray:
        return np.nonzero((self.status == VAR) & (self.nv > 0))[0]

    def members(self, v: int) -> list:
        """Original vertices merged into representative v, v first."""
        out = [v]
        cur = int(self.member_next[v])
        while cur != -1:
            out.append(cur)
            cur = int(self.member_next[cur])
        return out

    def reconstruct_neighborhood(self, v: int) -> np.ndarray:
        """Live representative neighborhood of v, sorted, v excluded."""
        if not self.is_live_variable(v):
            raise ValueError(f"{v} is not a live variable")
        self._mclock[0] += 1
        cnt = _reconstruct(self.pool, self.head, self.alen, self.elen, self.llen,
                           self.status, self.nv, v, self._mark, self._mclock[0],
                           self._nbuf)
        return np.sort(self._nbuf[:cnt].astype(np.int64))

    # -- mutation ---------------------------------------------------------

    def eliminate_pivot(self, p: int, reservation: PoolReservation | None = None) -> PivotRecord:
        """Eliminate live variable p. Without an explicit reservation, space
        is reserved here and the unused tail surrendered (sequential use)."""
        if not self.is_live_variable(p):
            raise ValueError(f"{p} is not a live variable")
        auto = reservation is None
        if auto:
            bound = int(_reservation_bound(self.pool, self.head, self.alen,
                                           self.elen, self.llen, self.status,
                                           np.asarray([p], dtype=self.pool.dtype)))
            reservation = self.reserve_pool(bound)
        self._mclock[0] += 1
        cnt, lpd, w_p = _eliminate_pivot(
            self.pool, self.head, self.alen, self.elen, self.llen, self.status,
            self.parent, self.nv, self.degree, p, reservation.offset,
            self._mark, self._mclock[0])
        if auto:
            self.surrender_tail(reservation, int(cnt))
        return PivotRecord(pivot=p, offset=int(reservation.offset),
                           length=int(cnt), weighted_size=int(lpd), weight=int(w_p))

    def merge_indistinguishable(self, rec: PivotRecord) -> np.ndarray:
        """Merge indistinguishable variables within rec's L_p. Returns the
        ids that were absorbed into their surviving twins."""
        out = np.empty(max(rec.length, 1), dtype=np.int64)
        nm = _merge_scope(self.pool, self.head, self.alen, self.elen, self.llen,
                          self.status, self.parent, self.nv, self.degree,
                          self.member_next, self.member_tail, self._mark,
                          self._mclock, rec.offset, rec.length, rec.pivot, out)
        return out[:nm].copy()

    # -- debugging --------------------------------------------------------

    def dump(self) -> str:
        """One line per node for golden-file comparisons.

        Variables: ``v: var A=[...] E=[...]``; elements: ``e: elem L=[...]
        w=<weighted size at creation>``; merged: ``v: merged-><rep>``;
        dead nodes: ``e: dead``. List entries are the raw stored ids,
        sorted; stale entries are visible on purpose.
        """
        lines = []
        for v in range(self.n):
            st = self.status[v]
            b = int(self.head[v])
            if st == VAR:
                a = sorted(self.pool[b:b + self.alen[v]].tolist())
                e = sorted(self.pool[b + self.alen[v]:b + self.alen[v] + self.elen[v]].tolist())
                lines.append(f"{v}: var A={a} E={e}")
            elif st == ELEM:
                l = sorted(self.pool[b:b + self.llen[v]].tolist())
                lines.append(f"{v}: elem L={l} w={int(self.degree[v])}")
            elif st == MERGED:
                lines.append(f"{v}: merged->{int(self.parent[v])}")
            else:
                lines.append(f"{v}: dead")
        return "\n".join(lines)
