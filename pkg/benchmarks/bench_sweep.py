"""Compare the compiled and numpy grid-sweep kernels on slot milling.

Runs the same tooth sweeps (rigid tool, nominal feed) through every
available backend, checks that they remove identical nodes and prints
the wall time of each.

    python3 benchmarks/bench_sweep.py [--steps N] [--repeat K]
"""

import argparse
import time

import numpy as np

from robomill import kernels
from robomill.cutting_force import CuttingParams
from robomill.workpiece_grid import init_grid, sweep_teeth


def slot_case(steps, dt=2e-5):
    p = CuttingParams(k0=5e6, hs=1.8e-5, r=0.1, kr=0.3, ap=1e-5, R=0.01, Nz=4,
                      omega=8000.0, vf=4.0)
    fz = p.feed_per_tooth
    tau = dt * np.arange(steps + 1)
    centres = np.column_stack([-p.R + p.feed_speed * tau, np.zeros_like(tau)])
    phis = np.mod(p.spindle_rate * tau[:, None] + 2 * np.pi * np.arange(p.Nz) / p.Nz, 2 * np.pi)
    x_end = centres[-1, 0] + p.R
    grid = init_grid((0.0, max(x_end, fz), -1.05 * p.R, 1.05 * p.R), fz / 8, fz / 8)
    return p, centres, phis, grid


def run(backend, steps):
    p, centres, phis, grid = slot_case(steps)
    t = time.perf_counter()
    total = 0.0
    for k in range(1, steps + 1):
        areas, _ = sweep_teeth(grid, centres[k - 1], centres[k], phis[k - 1], phis[k], p.R,
                               backend)
        total += areas.sum()
    return time.perf_counter() - t, grid.count(), total


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"available backends: {', '.join(kernels.BACKENDS)} (active: {kernels.BACKEND})")
    results = {}
    for name in kernels.BACKENDS:
        times = []
        for _ in range(args.repeat):
            elapsed, count, area = run(name, args.steps)
            times.append(elapsed)
        results[name] = (min(times), count, area)
        print(f"{name:8s} best of {args.repeat}: {min(times):8.3f} s  "
              f"({1e6 * min(times) / args.steps:7.1f} us/step)  nodes left {count}")
    counts = {r[1] for r in results.values()}
    print("identical removal:", "yes" if len(counts) == 1 else "NO")
    if "cython" in results:
        print(f"speed-up: {results['python'][0] / results['cython'][0]:.1f}x")


if __name__ == "__main__":
    main()
