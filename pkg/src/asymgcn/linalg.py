"""Dense and sparse linear-algebra primitives for the model.

Dense matrices are plain 2-D float64 numpy arrays.  Sparse matrices use a
small CSR container so the adjacency never materializes densely; the
sparse-dense product dispatches to the selected kernel backend (compiled or
numpy, see :mod:`asymgcn._kernels`).

Every operation here allocates its outputs through :func:`alloc_dense`, so
:func:`track_allocations` can audit that nothing n-by-n is ever created on
large graphs.
"""

from contextlib import contextmanager

import numpy as np

from . import _kernels
from .errors import DimensionMismatch

_ALLOC_LOG = None  # active allocation record, or None when not tracking


@contextmanager
def track_allocations():
    """Record the shape of every dense allocation made by package kernels.

    Yields a list that accumulates (rows, cols) tuples.  Nesting is not
    supported (the inner context would steal the outer one's records).
    """
    global _ALLOC_LOG
    if _ALLOC_LOG is not None:
        raise RuntimeError("track_allocations does not nest")
    _ALLOC_LOG = []
    try:
        yield _ALLOC_LOG
    finally:
        _ALLOC_LOG = None


def note_allocation(shape):
    """Register an allocation made outside alloc_dense (e.g. kernel temporaries)."""
    if _ALLOC_LOG is not None:
        _ALLOC_LOG.append(tuple(int(s) for s in shape))


def alloc_dense(rows, cols):
    """Zero-initialized (rows, cols) float64 array, logged when tracking."""
    note_allocation((rows, cols))
    return np.zeros((rows, cols), dtype=np.float64)


def as_dense(a):
    """Validate/convert ``a`` to a 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got ndim={arr.ndim}")
    return arr


class SparseMatrix:
    """Compressed-row matrix with float64 values and int64 indexing.

    Column indices are strictly increasing within each row (duplicates are
    rejected at construction), which makes equality of structure easy to
    test and keeps kernel traversal order deterministic.
    """

    __slots__ = ("rows", "cols", "indptr", "indices", "data")

    def __init__(self, rows, cols, indptr, indices, data):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        if self.indptr.shape != (self.rows + 1,):
            raise DimensionMismatch(
                f"indptr length {self.indptr.shape[0]} != rows+1 = {self.rows + 1}"
            )
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise DimensionMismatch("indptr endpoints disagree with nnz")
        if np.any(np.diff(self.indptr) < 0):
            raise DimensionMismatch("indptr must be monotone")
        if self.indices.shape != self.data.shape:
            raise DimensionMismatch("indices and data lengths differ")
        if self.indices.size and (
            self.indices.min() < 0 or self.indices.max() >= self.cols
        ):
            raise DimensionMismatch("column index out of range")
        # strictly increasing columns inside each row
        if self.indices.size:
            same_row = np.repeat(
                np.arange(self.rows), np.diff(self.indptr)
            )
            within = np.diff(self.indices) <= 0
            boundary = np.diff(same_row) != 0
            if np.any(within & ~boundary):
                raise DimensionMismatch(
                    "column indices must be strictly increasing within each row"
                )

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @classmethod
    def from_coo(cls, rows, cols, ii, jj, values):
        """Build from coordinate triples; sorts rows/columns, rejects duplicates."""
        ii = np.asarray(ii, dtype=np.int64)
        jj = np.asarray(jj, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (ii.shape == jj.shape == values.shape):
            raise DimensionMismatch("coordinate arrays must have equal length")
        order = np.lexsort((jj, ii))
        ii, jj, values = ii[order], jj[order], values[order]
        if ii.size > 1 and np.any((np.diff(ii) == 0) & (np.diff(jj) == 0)):
            raise DimensionMismatch("duplicate coordinate entry")
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.add.at(indptr, ii + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(rows, cols, indptr, jj, values)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    def transpose(self) -> "SparseMatrix":
        """CSR transpose via counting sort over columns — O(nnz + cols)."""
        t_indptr = np.zeros(self.cols + 1, dtype=np.int64)
        np.add.at(t_indptr, self.indices + 1, 1)
        np.cumsum(t_indptr, out=t_indptr)
        # stable sort by column keeps rows ascending inside each output row
        order = np.argsort(self.indices, kind="stable")
        row_of = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))
        return SparseMatrix(
            self.cols, self.rows, t_indptr, row_of[order], self.data[order]
        )

    def row_normalize(self) -> "SparseMatrix":
        """Rows scaled to sum 1 (zero rows left untouched)."""
        row_of = np.repeat(np.arange(self.rows), np.diff(self.indptr))
        sums = np.bincount(row_of, weights=self.data, minlength=self.rows)
        scale = np.ones(self.rows)
        nonzero = sums != 0.0
        scale[nonzero] = 1.0 / sums[nonzero]
        return SparseMatrix(
            self.rows, self.cols, self.indptr, self.indices, self.data * scale[row_of]
        )

    def to_dense(self) -> np.ndarray:
        """Densify (tests and small examples only)."""
        out = alloc_dense(self.rows, self.cols)
        row_of = np.repeat(np.arange(self.rows), np.diff(self.indptr))
        out[row_of, self.indices] = self.data
        return out


def spmm(s: SparseMatrix, d: np.ndarray) -> np.ndarray:
    """Sparse @ dense with O(nnz * cols) work; backend-dispatched."""
    d = as_dense(d)
    if s.cols != d.shape[0]:
        raise DimensionMismatch(f"spmm: {s.rows}x{s.cols} @ {d.shape[0]}x{d.shape[1]}")
    if _ALLOC_LOG is not None and s.nnz:
        # the numpy fallback expands one product row per stored entry
        note_allocation((s.nnz, d.shape[1]))
    out = alloc_dense(s.rows, d.shape[1])
    _kernels.spmm_csr(s.indptr, s.indices, s.data, np.ascontiguousarray(d), out)
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense product; numpy's BLAS path, deterministic for a fixed build."""
    a, b = as_dense(a), as_dense(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"matmul: {a.shape} @ {b.shape}")
    note_allocation((a.shape[0], b.shape[1]))
    return a @ b


def relu(m: np.ndarray) -> np.ndarray:
    m = as_dense(m)
    note_allocation(m.shape)
    return np.maximum(m, 0.0)


def softmax_rows(m: np.ndarray) -> np.ndarray:
    """Row softmax with max-subtraction; rows sum to 1 within 1e-12."""
    m = as_dense(m)
    note_allocation(m.shape)
    shifted = m - m.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=1, keepdims=True)
    return shifted


def concat_cols(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = as_dense(a), as_dense(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"concat_cols: {a.shape[0]} vs {b.shape[0]} rows")
    note_allocation((a.shape[0], a.shape[1] + b.shape[1]))
    return np.hstack([a, b])
