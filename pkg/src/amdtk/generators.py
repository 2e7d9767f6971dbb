"""Synthetic test patterns: grid Laplacian stencils, random graphs, paths,
random trees, plus a Matrix Market writer so generated instances can round
trip through the normal input path."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .matrixio import RawTriplets, SparsePattern, symmetrize_pattern


def _from_edges(n: int, rows, cols) -> SparsePattern:
    t = RawTriplets(n, n, np.asarray(rows, dtype=np.int64),
                    np.asarray(cols, dtype=np.int64), "general")
    return symmetrize_pattern(t)


def grid2d_pattern(k: int) -> SparsePattern:
    """k-by-k five-point grid: vertex (i,j) = i*k + j, rook adjacency."""
    if k < 1:
        raise ValueError("k must be positive")
    idx = np.arange(k * k, dtype=np.int64).reshape(k, k)
    right = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    down = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    edges = np.concatenate([right, down], axis=1)
    return _from_edges(k * k, edges[0], edges[1])


def grid3d_pattern(k: int) -> SparsePattern:
    """k-by-k-by-k seven-point grid."""
    if k < 1:
        raise ValueError("k must be positive")
    idx = np.arange(k ** 3, dtype=np.int64).reshape(k, k, k)
    pairs = [
        (idx[:, :, :-1], idx[:, :, 1:]),
        (idx[:, :-1, :], idx[:, 1:, :]),
        (idx[:-1, :, :], idx[1:, :, :]),
    ]
    rows = np.concatenate([a.ravel() for a, _ in pairs])
    cols = np.concatenate([b.ravel() for _, b in pairs])
    return _from_edges(k ** 3, rows, cols)


def path_pattern(n: int) -> SparsePattern:
    if n < 1:
        raise ValueError("n must be positive")
    r = np.arange(n - 1, dtype=np.int64)
    return _from_edges(n, r, r + 1)


def random_tree_pattern(n: int, seed: int = 0) -> SparsePattern:
    """Uniform-attachment random tree: vertex i > 0 hangs off a random
    earlier vertex."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    kids = np.arange(1, n, dtype=np.int64)
    parents = (rng.random(n - 1) * kids).astype(np.int64)
    return _from_edges(n, parents, kids)


def random_graph_pattern(n: int, p: float, seed: int = 0) -> SparsePattern:
    """G(n, m) with m = round(p * C(n, 2)) distinct edges, so p is the
    expected density and p * (n - 1) the expected average degree."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    total = n * (n - 1) // 2
    m = int(round(p * total))
    rng = np.random.default_rng(seed)
    if total == 0 or m == 0:
        return _from_edges(n, [], [])
    if 2 * m >= total:
        # dense: rejection sampling degenerates, enumerate and choose
        u, v = np.triu_indices(n, k=1)
        pick = np.sort(rng.choice(total, size=m, replace=False))
        return _from_edges(n, u[pick], v[pick])
    chosen = np.empty(0, dtype=np.int64)
    while chosen.shape[0] < m:
        draw = rng.integers(0, total, size=int((m - chosen.shape[0]) * 1.3) + 16)
        chosen = np.unique(np.concatenate([chosen, draw]))
    chosen = chosen[:m]
    # invert row-major linear index over the strict upper triangle
    rows = np.arange(n - 1, dtype=np.int64)
    base = rows * (2 * n - rows - 1) // 2
    u = np.searchsorted(base, chosen, side="right") - 1
    v = u + 1 + (chosen - base[u])
    return _from_edges(n, u, v)


def write_matrix_market(pattern: SparsePattern, target) -> None:
    """Write the pattern as coordinate/pattern/symmetric Matrix Market,
    lower triangle stored. Accepts a path or a text file object."""
    n = pattern.n
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(pattern.indptr))
    cols = pattern.indices
    keep = rows > cols
    lr, lc = rows[keep], cols[keep]

    def emit(fh):
        fh.write("%%MatrixMarket matrix coordinate pattern symmetric\n")
        fh.write(f"{n} {n} {lr.shape[0]}\n")
        for i in range(lr.shape[0]):
            fh.write(f"{lr[i] + 1} {lc[i] + 1}\n")

    if isinstance(target, (str, Path)):
        with open(target, "w") as fh:
            emit(fh)
    else:
        emit(target)


def generate_from_spec(spec: str, seed: int = 0) -> tuple[SparsePattern, str]:
    """Decode a generator spec string: grid2d:<k>, grid3d:<k>, er:<n>,<p>,
    path:<n>, tree:<n>. Returns (pattern, canonical name)."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "grid2d":
            k = int(rest)
            return grid2d_pattern(k), f"grid2d:{k}"
        if kind == "grid3d":
            k = int(rest)
            return grid3d_pattern(k), f"grid3d:{k}"
        if kind == "er":
            n_s, p_s = rest.split(",")
            n, p = int(n_s), float(p_s)
            return random_graph_pattern(n, p, seed), f"er:{n},{p}"
        if kind == "path":
            n = int(rest)
            return path_pattern(n), f"path:{n}"
        if kind == "tree":
            n = int(rest)
            return random_tree_pattern(n, seed), f"tree:{n}"
    except (ValueError, TypeError) as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown generator kind {kind!r} "
                     "(expected grid2d, grid3d, er, path, or tree)")
