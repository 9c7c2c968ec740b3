#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times one synchronous CCA step, one GHM step, and one full marking pass on
a regular ball, for both backends, and checks that the outputs agree
bit-for-bit.

Usage:
    python benchmarks/kernel_bench.py [--d D] [--radius R] [--iters N]

The packaged selection works differently (TREECCA_BACKEND at import time);
this script calls both implementations directly so one process can compare
them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from treecca import _kernels
from treecca.tree import build_regular_ball, sample_uniform_coloring


def bench(fn, iters, *args):
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--radius", type=int, default=12)
    ap.add_argument("--kappa", type=int, default=4)
    ap.add_argument("--theta", type=int, default=2)
    ap.add_argument("--iters", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    topo = build_regular_ball(args.d, args.radius)
    coloring = sample_uniform_coloring(topo, args.kappa, args.seed, 0)
    colors = coloring.colors
    out_a = np.empty_like(colors)
    out_b = np.empty_like(colors)
    print(f"nodes: {topo.node_count}  (d={args.d}, radius={args.radius}, "
          f"kappa={args.kappa}, theta={args.theta})")
    if not _kernels._HAVE_NUMBA:
        print("numba not importable: nothing to compare")
        return

    kap, th = np.int64(args.kappa), np.int64(args.theta)
    ones = np.ones(topo.node_count, dtype=np.uint8)
    marks_a = np.empty(topo.node_count, dtype=np.uint8)
    marks_b = np.empty(topo.node_count, dtype=np.uint8)

    jobs = [
        ("cca step",
         lambda: _kernels._cca_step_numba(colors, out_a, topo.parent,
                                          topo.child_ptr, kap, th),
         lambda: _kernels._cca_step_numpy(colors, out_b, topo.parent,
                                          topo.child_ptr, args.kappa, args.theta),
         lambda: np.array_equal(out_a, out_b)),
        ("ghm step",
         lambda: _kernels._ghm_step_numba(colors, out_a, topo.parent,
                                          topo.child_ptr, kap, th),
         lambda: _kernels._ghm_step_numpy(colors, out_b, topo.parent,
                                          topo.child_ptr, args.kappa, args.theta),
         lambda: np.array_equal(out_a, out_b)),
        ("mark (rigid fort)",
         lambda: _kernels._mark_numba(colors, marks_a, topo.parent,
                                      topo.child_ptr, kap,
                                      np.int64(_kernels.PRED_RIGID),
                                      np.int64(args.d + 1 - args.theta + 2),
                                      np.int64(args.d - args.theta + 2), ones),
         lambda: _kernels._mark_numpy(colors, marks_b, topo.parent,
                                      topo.level_ptr, args.kappa,
                                      _kernels.PRED_RIGID,
                                      args.d + 1 - args.theta + 2,
                                      args.d - args.theta + 2, ones),
         lambda: np.array_equal(marks_a, marks_b)),
    ]

    print(f"{'kernel':<20} {'numba(ms)':>10} {'numpy(ms)':>10} {'speedup':>8}  agree")
    for name, numba_fn, numpy_fn, agree in jobs:
        numba_fn()  # JIT warm-up
        nb_min, _ = bench(numba_fn, args.iters)
        np_min, _ = bench(numpy_fn, args.iters)
        print(f"{name:<20} {nb_min*1e3:>10.3f} {np_min*1e3:>10.3f} "
              f"{np_min/nb_min:>7.2f}x  {agree()}")


if __name__ == "__main__":
    main()
