"""Backend selection and cross-backend agreement for the sparse kernels."""

import subprocess
import sys

import numpy as np
import pytest

from asymgcn import _kernels
from asymgcn.linalg import SparseMatrix

HAVE_CYTHON = "cython" in _kernels.get_backends()


def random_csr_and_dense(seed, rows=37, cols=23, width=11, density=0.2):
    rng = np.random.default_rng(seed)
    mask = rng.random((rows, cols)) < density
    ii, jj = np.nonzero(mask)
    s = SparseMatrix.from_coo(rows, cols, ii, jj, rng.normal(size=ii.size))
    return s, rng.normal(size=(cols, width))


def run_kernel(impl, s, d):
    out = np.zeros((s.rows, d.shape[1]))
    impl.spmm_csr(s.indptr, s.indices, s.data, np.ascontiguousarray(d), out)
    return out


def test_backend_name_is_known():
    assert _kernels.backend_name() in ("python", "cython")
    assert _kernels.BACKEND == _kernels.backend_name()


def test_python_fallback_always_available():
    assert "python" in _kernels.get_backends()


@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_within_rounding(seed):
    # The C loop reduces each row sequentially while numpy's reduceat reduces
    # segments pairwise, so agreement is a few ULP rather than bit-for-bit.
    # Reordering a sum perturbs it relative to the sum of |terms|, not the
    # result (which can cancel to ~0), so the bound is |A| @ |X| scaled.
    if not HAVE_CYTHON:
        pytest.skip("compiled backend not built")
    backends = _kernels.get_backends()
    s, d = random_csr_and_dense(seed)
    a = run_kernel(backends["python"], s, d)
    b = run_kernel(backends["cython"], s, d)
    bound = np.abs(s.to_dense()) @ np.abs(d)
    assert (np.abs(a - b) <= 1e-13 * bound).all()


@pytest.mark.parametrize("name", ["python", "cython"])
def test_each_backend_is_bit_deterministic(name):
    backends = _kernels.get_backends()
    if name not in backends:
        pytest.skip(f"{name} backend not built")
    s, d = random_csr_and_dense(99, rows=64, cols=64, width=16)
    first = run_kernel(backends[name], s, d)
    second = run_kernel(backends[name], s, d)
    assert np.array_equal(first, second)


def test_empty_matrix_gives_zero_output():
    s = SparseMatrix(3, 3, [0, 0, 0, 0], [], [])
    for impl in _kernels.get_backends().values():
        out = run_kernel(impl, s, np.ones((3, 2)))
        assert np.array_equal(out, np.zeros((3, 2)))


def _backend_in_subprocess(value):
    return subprocess.run(
        [sys.executable, "-c",
         "import asymgcn; print(asymgcn.backend_name())"],
        capture_output=True, text=True, env={"ASYMGCN_KERNELS": value, "PATH": ""},
    )


def test_env_var_forces_python_backend():
    proc = _backend_in_subprocess("python")
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "python"


def test_env_var_forces_cython_backend():
    if not HAVE_CYTHON:
        pytest.skip("compiled backend not built")
    proc = _backend_in_subprocess("cython")
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == "cython"


def test_env_var_rejects_unknown_backend():
    proc = _backend_in_subprocess("fortran")
    assert proc.returncode != 0
    assert "ASYMGCN_KERNELS" in proc.stderr
