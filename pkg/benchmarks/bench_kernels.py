"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--m 100000] [--rows 4000] [--cols 402] [--repeat 5]

Both paths are called directly, so the CLFGOF_DISABLE_NUMBA flag does not
matter here. The first numba call (compilation) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from clfgof import kernels
from clfgof._accel import NUMBA_AVAILABLE


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=100_000, help="scores per sample for rank counting")
    ap.add_argument("--rows", type=int, default=4000, help="LASSO design rows")
    ap.add_argument("--cols", type=int, default=402, help="LASSO design columns")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    s0 = np.round(rng.standard_normal(args.m), 2)  # rounding creates ties
    s1 = np.round(rng.standard_normal(args.m) + 0.3, 2)
    u0, u1 = rng.random(args.m), rng.random(args.m)

    X = rng.standard_normal((args.rows, args.cols))
    beta = np.zeros(args.cols)
    beta[:5] = 0.5
    Z = X @ beta + 0.5 * rng.standard_normal(args.rows)
    lam = 0.5 * np.sqrt(np.log(args.cols) / (args.rows / 2))
    Xf = np.asfortranarray(X)
    b0 = np.zeros(args.cols)

    cases = {
        "rank_counts": (lambda: kernels.rank_counts_numpy(s0, u0, s1, u1),
                        lambda: kernels.rank_counts_numba(s0, u0, s1, u1)),
        "cd_lasso": (lambda: kernels.cd_lasso_numpy(X, Z, lam, 1e-9, 10_000, b0),
                     lambda: kernels.cd_lasso_numba(Xf, Z, lam, 1e-9, 10_000, b0)),
    }
    print(f"{'kernel':<12} {'numpy (s)':>10} {'numba (s)':>10} {'speedup':>8}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = best_of(np_fn, args.repeat)
        if NUMBA_AVAILABLE:
            nb_fn()  # compile
            t_nb = best_of(nb_fn, args.repeat)
            print(f"{name:<12} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<12} {t_np:>10.4f} {'n/a':>10} {'':>8}")


if __name__ == "__main__":
    main()
