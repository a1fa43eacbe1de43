#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size 160] [--repeats 3]

Verifies bit-parity on each workload before timing it.
"""

import argparse
import time

import numpy as np

from ctaug.kernels import _numpy

try:
    from ctaug.kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=160, help="cube edge length")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _core is None:
        raise SystemExit("compiled kernels unavailable; build with: python setup.py build_ext --inplace")

    n = args.size
    rng = np.random.default_rng(0)
    volume = rng.uniform(-1200, 900, size=(n, n, n)).astype(np.float32)
    mask = (rng.random((n, n, n)) < 0.35).astype(np.uint8)
    out_shape = (int(n * 0.75), int(n * 1.25), int(n * 0.9))
    steps = tuple(n / o for o in out_shape)

    workloads = {
        "clip_affine": lambda impl: impl.clip_affine(volume, -19.5, 149.5, -19.5, 169.0),
        "resample_trilinear": lambda impl: impl.resample_trilinear(volume, out_shape, steps),
        "resample_nearest": lambda impl: impl.resample_nearest(mask, out_shape, steps),
        "label_components": lambda impl: impl.label_components(mask, 26),
        "histogram_fixed": lambda impl: impl.histogram_fixed(volume.ravel(), -1200.0, 900.0, 256),
    }

    print(f"volume {n}^3 = {n**3 / 1e6:.1f} Mvox, best of {args.repeats}")
    print(f"{'kernel':<20} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for name, runner in workloads.items():
        t_numpy, r_numpy = timeit(lambda: runner(_numpy), args.repeats)
        t_core, r_core = timeit(lambda: runner(_core), args.repeats)
        if name == "label_components":
            assert r_numpy[1] == r_core[1] and np.array_equal(r_numpy[0], r_core[0])
        elif name == "histogram_fixed":
            assert np.array_equal(r_numpy[0], r_core[0]) and r_numpy[1:] == r_core[1:]
        else:
            assert np.array_equal(r_numpy, r_core)
        print(f"{name:<20} {t_numpy * 1e3:>8.1f}ms {t_core * 1e3:>8.1f}ms {t_numpy / t_core:>7.2f}x")


if __name__ == "__main__":
    main()
