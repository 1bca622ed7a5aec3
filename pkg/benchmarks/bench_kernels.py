#!/usr/bin/env python3
"""Time the compiled grid kernels against the pure-Python fallback.

Runs each kernel on a fixed randomized workload with both backends, checks
the outputs are bitwise identical, and prints per-call timings plus the
speedup. Usage:

    python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import math
import time

import numpy as np

from pursuitsim._kernels import load_backend

RES = 0.25


def _grids(rng, n, shape=(40, 40), density=0.2):
    out = []
    ny, nx = shape
    for _ in range(n):
        blocked = (rng.random(shape) < density).astype(np.uint8)
        ys, xs = np.nonzero(blocked == 0)
        i, j = rng.integers(0, len(ys), 2)
        out.append((blocked, (int(xs[i]), int(ys[i])),
                    (int(xs[j]), int(ys[j]))))
    return out


def bench_astar(impl, work):
    results = []
    t0 = time.perf_counter()
    for blocked, start, goal in work:
        path, cost, _ = impl.astar_path(blocked, start, goal, RES)
        results.append((path, cost))
    return time.perf_counter() - t0, results


def bench_dijkstra(impl, work):
    results = []
    t0 = time.perf_counter()
    for blocked, _, goal in work:
        results.append(impl.dijkstra_field(blocked, goal, RES))
    return time.perf_counter() - t0, results


def bench_lidar(impl, scenes):
    results = []
    t0 = time.perf_counter()
    for x, y, theta, circles in scenes:
        results.append(impl.lidar_scan(x, y, theta, circles, 10.0, 10.0,
                                       10.0, True))
    return time.perf_counter() - t0, results


def bench_belief(impl, casts):
    results = []
    t0 = time.perf_counter()
    for ranges, x, y, theta in casts:
        cells = np.zeros((40, 40), dtype=np.uint8)
        counts = impl.belief_update_rays(cells, x, y, theta, ranges, 10.0, RES)
        results.append((cells, counts))
    return time.perf_counter() - t0, results


def _same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(b, a)
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return a == b


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=200,
                    help="workload size per kernel (default 200)")
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    n = args.repeats
    grid_work = _grids(rng, n)
    scenes = [(float(rng.uniform(1, 9)), float(rng.uniform(1, 9)),
               float(rng.uniform(-math.pi, math.pi)),
               rng.uniform(1.0, 9.0, (6, 3)))
              for _ in range(n)]
    for _, _, _, circles in scenes:
        circles[:, 2] = 0.3 + 0.4 * (circles[:, 2] - 1.0) / 8.0
    casts = [(np.asarray([float(rng.uniform(0.5, 10.0)) for _ in range(8)]),
              float(rng.uniform(1, 9)), float(rng.uniform(1, 9)),
              float(rng.uniform(-math.pi, math.pi)))
             for _ in range(n)]

    try:
        compiled = load_backend("c")
    except ImportError:
        print("compiled backend not built; nothing to compare")
        return 1
    pure = load_backend("python")

    benches = [
        ("astar_path", bench_astar, grid_work),
        ("dijkstra_field", bench_dijkstra, grid_work),
        ("lidar_scan", bench_lidar, scenes),
        ("belief_update_rays", bench_belief, casts),
    ]
    print(f"workload: {n} calls per kernel, 40x40 grids, 8-ray scans")
    print(f"{'kernel':<20} {'compiled':>12} {'pure':>12} {'speedup':>9}  parity")
    all_ok = True
    for name, fn, work in benches:
        t_c, out_c = fn(compiled, work)
        t_p, out_p = fn(pure, work)
        ok = _same(out_c, out_p)
        all_ok = all_ok and ok
        print(f"{name:<20} {t_c / n * 1e6:>10.1f}us {t_p / n * 1e6:>10.1f}us"
              f" {t_p / t_c:>8.1f}x  {'bitwise' if ok else 'MISMATCH'}")
    if not all_ok:
        print("parity FAILED: backends disagree")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
