"""Compare the compiled and numpy ZF kernels on batched trial stacks.

Usage: ``python benchmarks/bench_kernels.py [--trials 2048] [--repeat 5]``
"""

import argparse
import time

import numpy as np

from cpsa import kernels

SHAPES = [(8, 3), (16, 8), (32, 8), (64, 8), (64, 24), (128, 24)]


def _stack(rng, T, M, K):
    H = (rng.standard_normal((T, M, K)) + 1j * rng.standard_normal((T, M, K))) / np.sqrt(2)
    E = (rng.standard_normal((T, M, K)) + 1j * rng.standard_normal((T, M, K))) / np.sqrt(2)
    return H + 0.3 * E, H


def _best(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = kernels.get_kernel("python")
    try:
        cy = kernels.get_kernel("cython")
    except ImportError:
        cy = None
        print("compiled kernel not built; timing the numpy kernel only")

    rng = np.random.default_rng(0)
    print(f"{'M':>4} {'K':>3} {'numpy us/trial':>15} {'cython us/trial':>16} {'speedup':>8}"
          f" {'max |diff|':>11}")
    for M, K in SHAPES:
        Hh, H = _stack(rng, args.trials, M, K)
        tp = _best(py, (Hh, H, False), args.repeat) / args.trials * 1e6
        if cy is None:
            print(f"{M:>4} {K:>3} {tp:>15.2f}")
            continue
        tc = _best(cy, (Hh, H, False), args.repeat) / args.trials * 1e6
        gp, lp = py(Hh, H, False)[:2]
        gc, lc = cy(Hh, H, False)[:2]
        diff = max(np.abs(gp - gc).max(), np.abs(lp - lc).max())
        print(f"{M:>4} {K:>3} {tp:>15.2f} {tc:>16.2f} {tp / tc:>8.2f} {diff:>11.1e}")


if __name__ == "__main__":
    main()
