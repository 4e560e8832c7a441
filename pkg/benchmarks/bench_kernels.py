"""Time the numba and numpy dual coordinate descent kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 2000] [--d 10] [--sweeps 50]

Both kernels run a fixed number of sweeps (tol=0 so neither stops early), the
weights are compared, and the per-sweep time is printed.
"""

import argparse
import time

import numpy as np

from minimpute import _kernels


def run(kernel, X, y, C, sweeps):
    alpha = np.zeros(X.shape[0])
    w = np.zeros(X.shape[1])
    t = time.perf_counter()
    kernel(X, y, alpha, w, C, 0.0, sweeps)
    return time.perf_counter() - t, w


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--C", type=float, default=1.0)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.n, args.d))
    y = np.where(X @ rng.normal(size=args.d) + 0.3 * rng.normal(size=args.n) >= 0, 1.0, -1.0)

    t_np, w_np = run(_kernels.dcd_numpy, X, y, args.C, args.sweeps)
    print(f"numpy : {t_np / args.sweeps * 1e3:9.3f} ms/sweep")
    if not _kernels.HAVE_NUMBA:
        print("numba : not installed")
        return
    run(_kernels.dcd_numba, X, y, args.C, 1)  # compile
    t_nb, w_nb = run(_kernels.dcd_numba, X, y, args.C, args.sweeps)
    print(f"numba : {t_nb / args.sweeps * 1e3:9.3f} ms/sweep")
    print(f"speedup {t_np / t_nb:.1f}x, max |w diff| {np.abs(w_np - w_nb).max():.2e}")


if __name__ == "__main__":
    main()
