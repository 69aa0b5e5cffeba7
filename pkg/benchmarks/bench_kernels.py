#!/usr/bin/env python3
"""Benchmark the compiled coordinate-descent kernel against the pure-NumPy
fallback on representative penalized least-squares problems.

Both kernels are run on identical inputs; the script verifies they produce
the same coefficients (to float noise) and reports per-fit wall time and
the speedup.  Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from sparseselect._kernels import numpy_backend
from sparseselect.experiments import DesignSpec, gen_design

try:
    from sparseselect._kernels import _cd_fast
except ImportError:
    _cd_fast = None

SIZES = [
    (200, 20, 0.3),
    (800, 20, 0.3),
    (2000, 100, 0.5),
    (4000, 200, 0.5),
]


def make_problem(n, m, rho, seed):
    rng = np.random.default_rng(seed)
    x = gen_design(n, m, DesignSpec(kind="equicorrelated", rho=rho), 3.0, rng)
    beta0 = np.zeros(m)
    k = max(2, m // 10)
    beta0[rng.choice(m, k, replace=False)] = rng.uniform(-2, 2, k)
    y = x @ beta0 + rng.normal(size=n)
    r = 0.1 * float(np.abs(x.T @ y / n).max())
    return np.asfortranarray(x), y, r


def run_kernel(kernel, x, y, r, c, repeats):
    m = x.shape[1]
    order = np.arange(m, dtype=np.intp)
    best = np.inf
    beta = None
    sweeps = 0
    for _ in range(repeats):
        beta = np.zeros(m)
        residual = y.copy()
        t0 = time.perf_counter()
        sweeps, _ = kernel(x, residual, beta, r, c, order, 100_000, 1e-8)
        best = min(best, time.perf_counter() - t0)
    return best, beta, sweeps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if _cd_fast is None:
        print("compiled kernel not built; benchmarking the NumPy fallback only")

    header = f"{'n':>6} {'M':>5} {'rho':>4} {'sweeps':>6} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, m, rho in SIZES:
        x, y, r = make_problem(n, m, rho, seed=(n, m))
        t_py, b_py, sweeps = run_kernel(numpy_backend.enet_cd_sweeps, x, y, r, 0.01, args.repeats)
        if _cd_fast is None:
            print(f"{n:>6} {m:>5} {rho:>4} {sweeps:>6} {t_py * 1e3:>10.3f} {'-':>12} {'-':>8}")
            continue
        t_c, b_c, _ = run_kernel(_cd_fast.enet_cd_sweeps, x, y, r, 0.01, args.repeats)
        drift = float(np.abs(b_py - b_c).max())
        assert drift < 1e-10, f"backends disagree by {drift}"
        print(f"{n:>6} {m:>5} {rho:>4} {sweeps:>6} {t_py * 1e3:>10.3f} "
              f"{t_c * 1e3:>12.3f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
