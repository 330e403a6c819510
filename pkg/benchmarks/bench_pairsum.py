"""Benchmark the compiled pair-sum backend against the pure-Python one.

Runs the correlated double sum for each r-dependent kernel over a range
of grid sizes and reports wall time, speedup, and the worst relative
difference between the two backends.

Usage: python benchmarks/bench_pairsum.py [--sizes 500,2000,8000]
"""

import argparse
import time

import numpy as np

import ionnoise._pairsum_py as pairsum_py

try:
    from ionnoise import _pairsum
except ImportError:
    _pairsum = None

KINDS = (("exponential", 0), ("sinc", 1), ("kelvin_ker0", 2))


def make_problem(rng, n_nodes, n_ions=2):
    x = rng.uniform(-10, 10, n_nodes)
    z = rng.uniform(-10, 10, n_nodes)
    w = np.full(n_nodes, 400.0 / n_nodes)
    gm = rng.normal(size=(n_ions, n_nodes))
    return x, z, w, np.ascontiguousarray(gm)


def time_call(fn, *args, **kwargs):
    best = np.inf
    for _ in range(3):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="500,2000,8000",
                        help="comma-separated node counts")
    parser.add_argument("--threads", type=int, default=0,
                        help="thread count for the compiled backend "
                        "(0 = all cores)")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _pairsum is None:
        print("compiled extension not available; timing fallback only")

    rng = np.random.default_rng(0)
    header = f"{'kernel':<13}{'nodes':>8}{'python':>12}{'compiled':>12}" \
             f"{'speedup':>9}{'max rel diff':>14}"
    print(header)
    print("-" * len(header))
    for name, kind in KINDS:
        xi = 1.5
        rmin = 0.05 if kind == 2 else 0.0
        norm = (pairsum_py.kelvin_ker0(rmin / xi) if kind == 2 else 1.0)
        for n in sizes:
            x, z, w, gm = make_problem(rng, n)
            t_py, s_py = time_call(
                pairsum_py.correlated_pair_sum, x, z, w, gm, kind, xi,
                rmin=rmin, norm=norm)
            if _pairsum is None:
                print(f"{name:<13}{n:>8}{t_py:>11.3f}s{'-':>12}{'-':>9}"
                      f"{'-':>14}")
                continue
            t_c, s_c = time_call(
                _pairsum.correlated_pair_sum, x, z, w, gm, kind, xi,
                rmin=rmin, norm=norm, num_threads=args.threads)
            rel = np.max(np.abs(s_c - s_py)) / np.max(np.abs(s_c))
            print(f"{name:<13}{n:>8}{t_py:>11.3f}s{t_c:>11.3f}s"
                  f"{t_py / t_c:>8.1f}x{rel:>14.2e}")


if __name__ == "__main__":
    main()
