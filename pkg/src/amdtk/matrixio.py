"""Matrix Market input, pattern symmetrization, and vertex permutations.

Only the sparsity pattern matters for ordering, so numeric values are read
past and discarded. Explicit zeros count as pattern entries. Diagonal
entries are dropped, duplicates collapse to one edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MatrixFormatError(ValueError):
    """Raised on malformed Matrix Market input. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_FIELDS = {"real", "integer", "complex", "pattern"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


@dataclass(frozen=True)
class RawTriplets:
    """Coordinate entries exactly as stored in the file, 0-based."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    symmetry: str  # "general" or "symmetric" (mirror implied)

    @property
    def nnz_stored(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class SparsePattern:
    """Symmetric adjacency structure in CSR form.

    No self-loops, indices sorted ascending within each row, and every edge
    stored in both directions, so ``nnz_offdiag`` counts directed slots
    (twice the undirected edge count).
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def nnz_offdiag(self) -> int:
        return len(self.indices)

    def adjacency(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)


@dataclass(frozen=True)
class Permutation:
    """Bijection between old and new vertex labels.

    ``order[k]`` is the old label placed at position ``k``;
    ``inverse[v]`` is the position of old label ``v``.
    """

    order: np.ndarray
    inverse: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        n = len(order)
        seen = np.zeros(n, dtype=bool)
        if n and (order.min() < 0 or order.max() >= n):
            raise ValueError("permutation entries out of range")
        seen[order] = True
        if not seen.all():
            raise ValueError("not a bijection: repeated entries")
        inverse = np.empty(n, dtype=np.int64)
        inverse[order] = np.arange(n, dtype=np.int64)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "inverse", inverse)

    def __len__(self) -> int:
        return len(self.order)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n, dtype=np.int64))


def parse_matrix_market(source) -> RawTriplets:
    """Parse coordinate Matrix Market text into RawTriplets.

    ``source`` is a path or a string containing the file body. Value fields
    (real/integer/complex) are skipped, only coordinates are kept.
    Raises MatrixFormatError naming the offending line.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        s = str(source)
        if s.lstrip().startswith("%%"):
            text = s
        else:
            with open(s, "r") as fh:
                text = fh.read()

    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError("empty input", 1)

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise MatrixFormatError("expected banner '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1)
    obj, fmt, fld, sym = (t.lower() for t in banner[1:])
    if obj != "matrix":
        raise MatrixFormatError(f"unsupported object {obj!r}", 1)
    if fmt != "coordinate":
        raise MatrixFormatError(f"unsupported format {fmt!r} (only coordinate)", 1)
    if fld not in _FIELDS:
        raise MatrixFormatError(f"unknown field {fld!r}", 1)
    if sym not in _SYMMETRIES:
        raise MatrixFormatError(f"unknown symmetry {sym!r}", 1)

    # locate the size line, skipping comments and blanks
    size_idx = None
    for idx in range(1, len(lines)):
        stripped = lines[idx].strip()
        if not stripped or stripped.startswith("%"):
            continue
        size_idx = idx
        break
    if size_idx is None:
        raise MatrixFormatError("missing size line", len(lines))
    tokens = lines[size_idx].split()
    if len(tokens) != 3:
        raise MatrixFormatError("size line must be '<rows> <cols> <nnz>'", size_idx + 1)
    try:
        n_rows, n_cols, nnz = (int(t) for t in tokens)
    except ValueError:
        raise MatrixFormatError("non-integer size line", size_idx + 1) from None
    if n_rows < 0 or n_cols < 0 or nnz < 0:
        raise MatrixFormatError("negative dimension", size_idx + 1)

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    count = 0
    for idx in range(size_idx + 1, len(lines)):
        stripped = lines[idx].strip()
        if not stripped or stripped.startswith("%"):
            continue
        if count >= nnz:
            raise MatrixFormatError(f"more than the declared {nnz} entries", idx + 1)
        tokens = stripped.split()
        if len(tokens) < 2:
            raise MatrixFormatError("entry needs at least row and column", idx + 1)
        try:
            i = int(tokens[0])
            j = int(tokens[1])
        except ValueError:
            raise MatrixFormatError(f"non-integer coordinates {tokens[:2]}", idx + 1) from None
        if not (1 <= i <= n_rows) or not (1 <= j <= n_cols):
            raise MatrixFormatError(f"entry ({i}, {j}) outside {n_rows} x {n_cols}", idx + 1)
        rows[count] = i - 1
        cols[count] = j - 1
        count += 1
    if count != nnz:
        raise MatrixFormatError(f"declared {nnz} entries but found {count}", len(lines))

    return RawTriplets(
        n_rows=n_rows,
        n_cols=n_cols,
        rows=rows,
        cols=cols,
        symmetry="general" if sym == "general" else "symmetric",
    )


def _build_csr(n: int, rows: np.ndarray, cols: np.ndarray) -> SparsePattern:
    # dedup via linear keys; unique() also gives row-major, column-minor order
    keys = np.unique(rows * np.int64(n) + cols)
    rr = keys // n
    cc = keys - rr * n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rr + 1, 1)
    np.cumsum(indptr, out=indptr)
    return SparsePattern(n=n, indptr=indptr, indices=cc)


def symmetrize_pattern(t: RawTriplets, *, skip_symmetrize: bool = False) -> SparsePattern:
    """Adjacency pattern of |A| + |A^T| with the diagonal removed.

    ``skip_symmetrize`` trusts a general-banner input to already be
    structurally symmetric and skips the transpose union. Symmetric-banner
    inputs always get their stored triangle mirrored (the file carries only
    half the pattern).
    """
    if t.n_rows != t.n_cols:
        raise ValueError(f"pattern must be square, got {t.n_rows} x {t.n_cols}")
    n = t.n_rows
    off = t.rows != t.cols
    rows = t.rows[off]
    cols = t.cols[off]
    if t.symmetry == "symmetric" or not skip_symmetrize:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    if n == 0:
        return SparsePattern(n=0, indptr=np.zeros(1, dtype=np.int64),
                             indices=np.empty(0, dtype=np.int64))
    return _build_csr(n, rows, cols)


def random_permutation(n: int, seed: int) -> Permutation:
    """Seeded uniform shuffle; identical (n, seed) gives identical output."""
    order = np.random.default_rng(seed).permutation(n).astype(np.int64)
    return Permutation(order)


def apply_permutation(p: SparsePattern, perm: Permutation) -> SparsePattern:
    """Relabel vertex v to perm.inverse[v], preserving the edge set."""
    if len(perm) != p.n:
        raise ValueError(f"permutation length {len(perm)} != n {p.n}")
    if p.n == 0:
        return p
    inv = perm.inverse
    rows = np.repeat(np.arange(p.n, dtype=np.int64), np.diff(p.indptr))
    return _build_csr(p.n, inv[rows], inv[p.indices])
