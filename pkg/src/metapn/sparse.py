"""Sparse CSR adjacency storage and the sparse-dense products used by propagation.

Everything downstream (label propagation, the PPR recurrence, the attention
propagator) consumes row-compressed matrices built here. All numerics are f64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CsrMatrix:
    """Row-compressed sparse matrix in canonical form.

    Canonical form: within each row the column indices are strictly
    increasing and no explicit zeros are stored after construction from an
    edge list.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray  # int64, length n_rows + 1
    col_indices: np.ndarray  # int64, length nnz
    values: np.ndarray  # float64, length nnz

    def __post_init__(self):
        if self.row_offsets.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != len(self.values):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if len(self.col_indices) != len(self.values):
            raise ValueError("col_indices and values length mismatch")
        if np.any(np.diff(self.row_offsets) < 0):
            raise ValueError("row_offsets must be non-decreasing")
        if len(self.col_indices) and (
            self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols
        ):
            raise ValueError("column index out of range")

    @property
    def nnz(self) -> int:
        return len(self.values)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row i."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out


def _csr_from_pairs(n_rows: int, n_cols: int, rows: np.ndarray, cols: np.ndarray,
                    vals: np.ndarray) -> CsrMatrix:
    """Assemble canonical CSR from (row, col, value) triples with unique keys."""
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    counts = np.bincount(rows, minlength=n_rows)
    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return CsrMatrix(n_rows, n_cols, offsets, cols.astype(np.int64),
                     vals.astype(np.float64))


def from_edge_list(n: int, edges: list[tuple[int, int]]) -> CsrMatrix:
    """Build a symmetric binary adjacency matrix from an undirected edge list.

    Each edge is stored in both directions, duplicates are collapsed, and
    self-loops in the input are dropped (normalization adds them exactly once).
    """
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
    if not edges:
        return CsrMatrix(n, n, np.zeros(n + 1, dtype=np.int64),
                         np.zeros(0, dtype=np.int64), np.zeros(0))
    e = np.asarray(edges, dtype=np.int64)
    e = e[e[:, 0] != e[:, 1]]
    if len(e) == 0:
        return from_edge_list(n, [])
    both = np.concatenate([e, e[:, ::-1]])
    keys = both[:, 0] * n + both[:, 1]
    keys = np.unique(keys)
    rows, cols = keys // n, keys % n
    return _csr_from_pairs(n, n, rows, cols, np.ones(len(keys)))


def sym_normalize_with_self_loops(adj: CsrMatrix) -> CsrMatrix:
    """Symmetric normalization of a binary adjacency after adding self-loops.

    Returns T with T[i][j] = (A + I)[i][j] / sqrt(d_i * d_j) where d is the
    degree in A + I. Every row keeps at least its self-loop, so no row is zero.
    """
    if adj.n_rows != adj.n_cols:
        raise ValueError("adjacency must be square")
    n = adj.n_rows
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(adj.row_offsets))
    cols = adj.col_indices
    off_diag = rows != cols
    rows = np.concatenate([rows[off_diag], np.arange(n, dtype=np.int64)])
    cols = np.concatenate([cols[off_diag], np.arange(n, dtype=np.int64)])
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    inv_sqrt = 1.0 / np.sqrt(deg)
    vals = inv_sqrt[rows] * inv_sqrt[cols]
    return _csr_from_pairs(n, n, rows, cols, vals)


def spmm(t: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Exact sparse-dense product T @ X in f64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or t.n_cols != x.shape[0]:
        raise ValueError(
            f"shape mismatch: ({t.n_rows}, {t.n_cols}) @ {x.shape}")
    out = np.zeros((t.n_rows, x.shape[1]))
    if t.nnz == 0:
        return out
    prod = t.values[:, None] * x[t.col_indices]
    counts = np.diff(t.row_offsets)
    nonempty = counts > 0
    starts = t.row_offsets[:-1][nonempty]
    out[nonempty] = np.add.reduceat(prod, starts, axis=0)
    return out
