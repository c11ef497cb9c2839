"""Benchmark: compiled vs NumPy pinball-loss kernels.

The exact quantile line fit is the one scalar-loop-bound kernel in the
package (O(T^3) per field, run per field and per replication in the
calibrated Monte Carlo). This script times both backends on panel-sized
workloads and reports the speedup.

    python benchmarks/bench_quantreg.py [--fields 200] [--repeats 5]
"""

import argparse
import time

import numpy as np

from basisrisk._kernels import BACKEND, available_backends


def time_panel(mod, values, f, tau, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        mod.panel_line_v(values, f, tau)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fields", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"selected backend at import: {BACKEND}")
    print(f"available backends: {', '.join(sorted(backends))}")
    print()
    header = f"{'T':>5} {'N':>5}" + "".join(f" {name:>12}" for name in sorted(backends))
    if len(backends) > 1:
        header += f" {'speedup':>9}"
    print(header)

    rng = np.random.default_rng(0)
    for t in (4, 10, 20, 50, 100):
        values = np.ascontiguousarray(rng.standard_normal((t, args.fields)))
        f = np.ascontiguousarray(values.mean(axis=1))
        times = {
            name: time_panel(mod, values, f, 0.3, args.repeats)
            for name, mod in backends.items()
        }
        line = f"{t:>5} {args.fields:>5}"
        for name in sorted(times):
            line += f" {times[name] * 1e3:>10.2f}ms"
        if len(times) > 1:
            line += f" {times['numpy'] / times['cython']:>8.1f}x"
        print(line)

    # sanity: both backends agree on the losses they just timed
    if len(backends) > 1:
        values = np.ascontiguousarray(rng.standard_normal((20, 50)))
        f = np.ascontiguousarray(values.mean(axis=1))
        v_np = backends["numpy"].panel_line_v(values, f, 0.3)
        v_cy = backends["cython"].panel_line_v(values, f, 0.3)
        print(f"\nbackend agreement: max |diff| = {np.abs(v_np - v_cy).max():.2e}")


if __name__ == "__main__":
    main()
