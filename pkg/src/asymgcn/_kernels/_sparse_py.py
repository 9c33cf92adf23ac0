"""Pure-numpy fallback for the sparse kernels.

Used when the compiled extension is unavailable (or when forced via
``ASYMGCN_KERNELS=python``).  Deterministic: the per-row reduction order is
fixed by the CSR layout.  Results match the compiled kernel to reduction
rounding (numpy reduces segments pairwise, the C loop sequentially), i.e.
to a few ULP — each backend alone is bit-stable across runs.
"""

import numpy as np


def spmm_csr(indptr, indices, data, dense, out):
    """out += CSR(indptr, indices, data) @ dense, accumulated row by row.

    ``out`` must be a pre-zeroed (n_rows, c) float64 array and is mutated in
    place.  Cost is O(nnz * c) time and O(nnz * c) auxiliary memory for the
    expanded products (never O(n^2)).
    """
    nnz = data.shape[0]
    if nnz == 0:
        return
    prods = data[:, None] * dense.take(indices, axis=0)
    # reduceat needs every start index to be valid, and its final segment
    # runs to the end of the array; a zero sentinel row absorbs both quirks.
    prods = np.vstack([prods, np.zeros((1, dense.shape[1]), dtype=np.float64)])
    seg = np.add.reduceat(prods, indptr[:-1], axis=0)
    empty = indptr[:-1] == indptr[1:]
    if empty.any():
        seg[empty] = 0.0
    out += seg
