"""Kernel backend selection.

At import time we prefer the compiled extension and fall back to the numpy
implementation.  Set ``ASYMGCN_KERNELS=python`` or ``ASYMGCN_KERNELS=cython``
to force a backend (forcing an unavailable one raises ImportError).
"""

import os

from . import _sparse_py

_VALID = ("cython", "python")
_forced = os.environ.get("ASYMGCN_KERNELS", "").strip().lower() or None
if _forced is not None and _forced not in _VALID:
    raise ImportError(
        f"ASYMGCN_KERNELS={_forced!r} not understood; expected one of {_VALID}"
    )

if _forced == "python":
    _impl, BACKEND = _sparse_py, "python"
else:
    try:
        from . import _sparse_cy as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl, BACKEND = _sparse_py, "python"

spmm_csr = _impl.spmm_csr


def backend_name() -> str:
    """Name of the kernel backend selected at import ('cython' or 'python')."""
    return BACKEND


def get_backends() -> dict:
    """All importable backends, keyed by name (used by the benchmark)."""
    found = {"python": _sparse_py}
    try:
        from . import _sparse_cy

        found["cython"] = _sparse_cy
    except ImportError:
        pass
    return found
