# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled CSR sparse-dense multiply — the training loop's hot kernel.

Row-sequential accumulation in stored-index order.  The build disables FMA
contraction so every multiply/add rounds like plain IEEE doubles; the numpy
fallback still reduces row segments pairwise, so the backends agree to a few
ULP rather than bitwise.  Each backend is deterministic on its own.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def spmm_csr(cnp.int64_t[::1] indptr,
             cnp.int64_t[::1] indices,
             double[::1] data,
             double[:, ::1] dense,
             double[:, ::1] out):
    """out += CSR(indptr, indices, data) @ dense; out must be pre-zeroed."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t c = dense.shape[1]
    cdef Py_ssize_t i, k, t, start, end
    cdef cnp.int64_t j
    cdef double v
    for i in range(n_rows):
        start = indptr[i]
        end = indptr[i + 1]
        for k in range(start, end):
            v = data[k]
            j = indices[k]
            for t in range(c):
                out[i, t] += v * dense[j, t]
