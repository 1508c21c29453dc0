"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Inputs are shaped like the MovieLens workload (610 x 9,724, ~50k cells).
Prints one line per kernel with the best-of-N time for each backend.
"""

import argparse
import timeit

import numpy as np

from pcmrec import _pykernels

try:
    from pcmrec import _kernels
except ImportError:  # extension not built
    _kernels = None


def workloads(quick: bool):
    rng = np.random.default_rng(0)
    m, n, nnz = (200, 2000, 8000) if quick else (610, 9724, 50418)
    keys = np.sort(rng.choice(m * n, size=nnz, replace=False))
    rows, cols = keys // n, keys % n
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=m))]).astype(np.int64)
    data = rng.integers(1, 11, nnz) / 2.0
    dense = rng.normal(size=(n, 30))

    g_dim = 60 if quick else 150
    b = rng.normal(size=(g_dim, g_dim))
    gram = b @ b.T
    tol = 1e-12 * np.linalg.norm(gram)
    perm = rng.permutation(nnz).astype(np.int64)

    # SVD++ epoch over a slice of the ratings; the fallback is slow per rating
    count = 2000 if quick else 5000
    f = 50
    users, items = rows[:count].astype(np.int64), cols[:count].astype(np.int64)
    order = np.lexsort((items, users))
    r_indptr = np.concatenate([[0], np.cumsum(np.bincount(users, minlength=m))]).astype(np.int64)
    r_indices = np.ascontiguousarray(items[order])
    ratings = data[:count].copy()
    visit = rng.permutation(count).astype(np.int64)

    def svdpp(k):
        params = [np.zeros(m), np.zeros(n)] + [np.full((s, f), 0.01) for s in (m, n, n)]
        return lambda: k.svdpp_epoch(visit, users, items, ratings, r_indptr, r_indices,
                                     3.5, *params, 0.005, 0.02)

    return {
        f"csr_matmul {m}x{n} nnz={nnz} by {n}x30": lambda k: lambda: k.csr_matmul(indptr, cols, data, dense),
        f"csr_row_norms_sq nnz={nnz}": lambda k: lambda: k.csr_row_norms_sq(indptr, data),
        f"jacobi_eig {g_dim}x{g_dim}": lambda k: lambda: k.jacobi_eig(gram.copy(), tol, 64),
        f"lis_length n={nnz}": lambda k: lambda: k.lis_length(perm),
        f"svdpp_epoch {count} ratings f={f}": svdpp,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller inputs")
    args = parser.parse_args(argv)

    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"{'kernel':<44}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, make in workloads(args.quick).items():
        times = []
        for _, module in backends:
            fn = make(module)
            times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)))
        cells = "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{label:<44}{cells}{speed}")
    if _kernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
