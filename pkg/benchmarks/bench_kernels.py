#!/usr/bin/env python3
"""Time the hot-loop kernels: compiled extension vs pure-Python fallback.

Both backends are imported directly (ignoring the CITYLENS_PURE_KERNELS
switch) and fed identical workloads, so the table shows exactly what the
compiled extension buys on this machine.

    python3 benchmarks/bench_kernels.py [--scale N]
"""

import argparse
import math
import time

import numpy as np

from citylens._kernels import _pure
from citylens.rng import SplitMix64

try:
    from citylens._kernels import _native
except ImportError:
    _native = None


def _ring(n_vertices: int, cx: float, cy: float, r: float) -> np.ndarray:
    ring = []
    for i in range(n_vertices):
        a = 2.0 * math.pi * i / n_vertices
        ring += [cx + r * math.cos(a), cy + r * math.sin(a)]
    return np.asarray(ring, dtype=np.float64)


def _workloads(scale: int):
    rng = SplitMix64(99)
    pts = [(113.9 + rng.uniform() * 0.4, 22.45 + rng.uniform() * 0.3) for _ in range(200 * scale)]
    ring = _ring(12, 114.1, 22.6, 0.05)
    rects = [
        (x, y, x + rng.uniform() * 0.1, y + rng.uniform() * 0.1)
        for x, y in [(113.9 + rng.uniform() * 0.4, 22.45 + rng.uniform() * 0.3) for _ in range(50 * scale)]
    ]
    line = np.asarray(
        [v for i in range(400) for v in (114.0 + i * 0.0005, 22.5 + 0.01 * math.sin(i / 7.0))],
        dtype=np.float64,
    )
    xs = np.asarray([p[0] for p in pts for _ in range(25)], dtype=np.float64)
    ys = np.asarray([p[1] for p in pts for _ in range(25)], dtype=np.float64)
    grid = np.abs(np.asarray([rng.uniform() for _ in range(200 * 200)], dtype=np.float64))

    def w_haversine(K):
        acc = 0.0
        for (x1, y1), (x2, y2) in zip(pts, reversed(pts)):
            acc += K.haversine_m(x1, y1, x2, y2)
        return acc

    def w_tile_xy(K):
        acc = 0
        for x, y in pts:
            for z in (10, 14, 18):
                tx, ty = K.tile_xy(x, y, z)
                acc += tx ^ ty
        return acc

    def w_point_in_ring(K):
        return sum(K.point_in_ring(x, y, ring) for x, y in pts)

    def w_ring_rect(K):
        return sum(K.ring_intersects_rect(ring, *r) for r in rects)

    def w_polyline(K):
        return sum(K.point_on_polyline(x, y, line, 1e-9) for x, y in pts)

    def w_bin(K):
        return float(K.bin_points(xs, ys, 113.9, 22.45, 0.005, 60, 80).sum())

    def w_blur(K):
        return float(K.blur_grid(grid, 200, 200, 2.0).sum())

    return [
        ("haversine_m", w_haversine),
        ("tile_xy", w_tile_xy),
        ("point_in_ring", w_point_in_ring),
        ("ring_intersects_rect", w_ring_rect),
        ("point_on_polyline", w_polyline),
        ("bin_points", w_bin),
        ("blur_grid", w_blur),
    ]


def _best_of(fn, repeats: int = 5) -> tuple[float, float]:
    best = math.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=int, default=5, help="workload multiplier (default 5)")
    args = parser.parse_args()

    if _native is None:
        print("compiled extension not built; timing the pure backend only")

    rows = []
    for name, work in _workloads(args.scale):
        t_pure, r_pure = _best_of(lambda: work(_pure))
        if _native is not None:
            t_nat, r_nat = _best_of(lambda: work(_native))
            if isinstance(r_pure, float):
                assert math.isclose(r_pure, r_nat, rel_tol=1e-9), name
            else:
                assert r_pure == r_nat, name
            rows.append((name, t_pure, t_nat, t_pure / t_nat))
        else:
            rows.append((name, t_pure, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'pure':>10}  {'native':>10}  {'speedup':>8}")
    for name, t_pure, t_nat, ratio in rows:
        if t_nat is None:
            print(f"{name:<{width}}  {t_pure * 1e3:>8.2f}ms  {'-':>10}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {t_pure * 1e3:>8.2f}ms  {t_nat * 1e3:>8.2f}ms  {ratio:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
