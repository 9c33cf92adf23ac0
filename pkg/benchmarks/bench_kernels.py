#!/usr/bin/env python3
"""Time the spmm kernel backends (compiled vs pure numpy) against each other.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 50000 --nnz 1000000 --cols 8,128

Reports best-of-N wall time per backend and the speedup of the compiled
kernel over the numpy fallback, and cross-checks that both backends agree
to reduction rounding (1e-13) on every size it times.
"""

import argparse
import time

import numpy as np

from asymgcn._kernels import backend_name, get_backends
from asymgcn.linalg import SparseMatrix


def random_csr(rows, cols, nnz, seed):
    rng = np.random.default_rng(seed)
    keys = np.unique(rng.integers(0, rows * cols, size=int(nnz * 1.05),
                                  dtype=np.int64))
    rng.shuffle(keys)
    keys = np.sort(keys[:nnz])
    entries = rng.normal(size=keys.shape[0])
    return SparseMatrix.from_coo(rows, cols, keys // cols, keys % cols, entries)


def run(impl, s, dense, out):
    out[:] = 0.0
    impl.spmm_csr(s.indptr, s.indices, s.data, dense, out)
    return out


def best_of(impl, s, dense, out, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        run(impl, s, dense, out)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--nnz", type=int, default=200000)
    ap.add_argument("--cols", default="16,64",
                    help="comma-separated dense widths to time")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = get_backends()
    print(f"backends found: {', '.join(backends)} "
          f"(default for this interpreter: {backend_name()})")
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy fallback only")

    s = random_csr(args.rows, args.rows, args.nnz, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    header = f"{'cols':>6} {'backend':>8} {'best ms':>10} {'MFLOP/s':>10}"
    print(f"\nCSR {args.rows}x{args.rows}, nnz={s.nnz}, best of {args.repeats}")
    print(header)
    print("-" * len(header))
    for cols in [int(c) for c in args.cols.split(",")]:
        dense = np.ascontiguousarray(rng.normal(size=(args.rows, cols)))
        out = np.empty((args.rows, cols))
        flops = 2.0 * s.nnz * cols
        times = {}
        results = {}
        for name, impl in backends.items():
            times[name] = best_of(impl, s, dense, out, args.repeats)
            results[name] = run(impl, s, dense, np.empty_like(out)).copy()
            print(f"{cols:>6} {name:>8} {times[name] * 1e3:>10.3f} "
                  f"{flops / times[name] / 1e6:>10.1f}")
        if len(backends) == 2:
            # reduction-order error is relative to the sum of |terms|, so the
            # agreement bound is |A| @ |X|, not the (possibly cancelling) result
            row_of = np.repeat(np.arange(s.rows), np.diff(s.indptr))
            abs_s = SparseMatrix.from_coo(s.rows, s.cols, row_of, s.indices,
                                          np.abs(s.data))
            bound = run(backends["python"], abs_s, np.abs(dense),
                        np.empty_like(out))
            gap = np.abs(results["python"] - results["cython"])
            if not (gap <= 1e-13 * bound).all():
                raise SystemExit("backends disagree beyond rounding!")
            print(f"{'':>6} {'':>8} speedup: "
                  f"{times['python'] / times['cython']:.2f}x, results agree")


if __name__ == "__main__":
    main()
