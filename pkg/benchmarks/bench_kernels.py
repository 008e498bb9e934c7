#!/usr/bin/env python3
"""Timing comparison of the numba kernels against the pure-numpy fallback.

Advances the steep-gradient interval scenario through its stiff early phase
(the window where the sink cap controls dt) at several resolutions and
reports wall time per backend plus the speedup.

Usage:
    python benchmarks/bench_kernels.py [--t-end T] [--repeats K]
"""
import argparse
import time

from nutaxis import advance, apply_override, build_grid, init_state, preset
from nutaxis.kernels import NUMBA_AVAILABLE


def time_backend(cfg, backend: str, t_end: float, repeats: int):
    grid = build_grid(cfg.geometry)
    best = float("inf")
    steps = 0
    for _ in range(repeats):
        state, _ = init_state(cfg.u0, cfg.v0, cfg.w0, grid)
        start = time.perf_counter()
        result = advance(state, grid, cfg.params, cfg.stepper, t_end,
                         backend=backend)
        best = min(best, time.perf_counter() - start)
        steps = result.stats.accepted
    return best, steps


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--t-end", type=float, default=0.5)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[100, 200, 400, 800])
    args = parser.parse_args()

    backends = ["numpy"]
    if NUMBA_AVAILABLE:
        backends.insert(0, "numba")
        # warm the JIT cache outside the timed region
        warm = apply_override(preset("fig1_right", 14), "geometry.n_cells", 50)
        time_backend(warm, "numba", 0.01, 1)
    else:
        print("numba not available; timing the numpy fallback only")

    print(f"{'n':>6} {'steps':>8}", end="")
    for b in backends:
        print(f" {b + ' [s]':>12}", end="")
    if len(backends) == 2:
        print(f" {'speedup':>8}", end="")
    print()

    for n in args.sizes:
        cfg = apply_override(preset("fig1_right", 14), "geometry.n_cells", n)
        times = {}
        steps = 0
        for b in backends:
            times[b], steps = time_backend(cfg, b, args.t_end, args.repeats)
        print(f"{n:>6} {steps:>8}", end="")
        for b in backends:
            print(f" {times[b]:>12.4f}", end="")
        if len(backends) == 2:
            print(f" {times['numpy'] / times['numba']:>8.2f}", end="")
        print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
