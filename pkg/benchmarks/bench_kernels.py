#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy twins.

Runs each hot kernel on a representative workload, warming the JIT first,
and prints per-kernel timings plus speedup. Works without numba too (the
numba column is then skipped).

    python benchmarks/bench_kernels.py [--repeat 200]
"""

import argparse
import time

import numpy as np

from waitbench import _kernels_numpy as knp

try:
    from waitbench import _kernels_numba as knb
except ImportError:
    knb = None


def bench(fn, args, repeat):
    fn(*args)  # warmup (and JIT compile for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def workloads(rng):
    X = rng.normal(size=(200, 48))
    yield "pairwise_sq_dist", "200x48 series", (np.ascontiguousarray(X),)

    m = 2000
    values = np.sort(rng.normal(size=m))
    labels = rng.integers(0, 8, size=m)
    yield "best_split_gini", f"{m} rows, 8 classes", (values, labels, 8, 2)

    g = rng.normal(size=m)
    h = rng.uniform(0.5, 1.5, size=m)
    yield "best_split_grad", f"{m} rows", (values, g, h, 1.0, 1)

    onset = rng.uniform(0, 0.2, size=100_000)
    u = rng.random(100_000)
    yield "markov_fill", "100k seconds", (onset, 0.25, u)

    n, p = 400, 40
    A = np.ascontiguousarray(rng.normal(size=(n, p)))
    y = np.ascontiguousarray(rng.normal(size=n))
    col_sq = np.einsum("ij,ij->j", A, A)
    active = np.arange(p, dtype=np.int64)
    yield "cd_solve", f"{n}x{p}, 200 sweeps", (
        A, y, np.zeros(p), 0.1, 0.05, col_sq, active, 200, 0.0,
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    rows = []
    for name, size, payload in workloads(rng):
        t_np = bench(getattr(knp, name), payload, args.repeat)
        if knb is not None:
            # cd_solve mutates beta in place; hand each backend a fresh copy.
            payload_nb = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in payload)
            t_nb = bench(getattr(knb, name), payload_nb, args.repeat)
            rows.append((name, size, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((name, size, t_np, None, None))

    print(f"{'kernel':<18} {'workload':<22} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, size, t_np, t_nb, speed in rows:
        if t_nb is None:
            print(f"{name:<18} {size:<22} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8}")
        else:
            print(f"{name:<18} {size:<22} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {speed:>7.1f}x")


if __name__ == "__main__":
    main()
