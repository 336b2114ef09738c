"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Runs each hot kernel on representative workloads with both backends and
prints per-call timings and the speedup ratio.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from windpath.kernels import _core_py

try:
    from windpath.kernels import _core
except ImportError:
    _core = None


def make_workloads(rng: np.random.Generator) -> dict:
    nx, ny, nz = 40, 40, 10
    vectors = rng.normal(size=(nx * ny * nz, 3)).astype(np.float32)
    occupied = (rng.random(nx * ny * nz) < 0.1).astype(np.uint8)
    occupied[5 + nx * (5 + ny * 5)] = 0

    n_in, h, n_out = 37, 128, 26
    x = rng.normal(size=n_in).astype(np.float32)
    mlp_params = [
        rng.normal(scale=0.2, size=(n_in, h)).astype(np.float32),
        np.zeros(h, dtype=np.float32),
        np.ones(h, dtype=np.float32),
        np.zeros(h, dtype=np.float32),
        rng.normal(scale=0.2, size=(h, h)).astype(np.float32),
        np.zeros(h, dtype=np.float32),
        np.ones(h, dtype=np.float32),
        np.zeros(h, dtype=np.float32),
        rng.normal(scale=0.2, size=(h, n_out)).astype(np.float32),
        np.zeros(n_out, dtype=np.float32),
    ]
    return {
        "trilinear_sample": lambda impl: impl.trilinear_sample(
            vectors, nx, ny, nz, 0.0, 0.0, 0.0, 10.0, 10.0, 10.0,
            123.4, 217.9, 55.5),
        "ray_distances": lambda impl: impl.ray_distances(
            occupied, nx, ny, nz, 5, 5, 5, 10.0, 10.0, 10.0),
        "move_energy": lambda impl: impl.move_energy(
            10.0, 12.0, 1.225, 0.7, 0.035, 0.4, 7.0, 9.8, 0.646),
        "segment_airspeed": lambda impl: impl.segment_airspeed(
            10.0, 10.0, 0.0, 0.7071, 3.0, -2.0, 0.0, 1.0),
        "mlp2_forward": lambda impl: impl.mlp2_forward(x, *mlp_params),
    }


def bench(fn, repeat: int) -> float:
    """Best-of-5 mean microseconds per call."""
    times = timeit.repeat(fn, number=repeat, repeat=5)
    return min(times) / repeat * 1e6


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000,
                    help="calls per timing sample")
    args = ap.parse_args()

    workloads = make_workloads(np.random.default_rng(0))
    header = f"{'kernel':<20} {'python us':>12} {'cython us':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call in workloads.items():
        t_py = bench(lambda: call(_core_py), args.repeat)
        if _core is None:
            print(f"{name:<20} {t_py:>12.2f} {'n/a':>12} {'n/a':>9}")
            continue
        t_cy = bench(lambda: call(_core), args.repeat)
        print(f"{name:<20} {t_py:>12.2f} {t_cy:>12.2f} {t_py / t_cy:>8.1f}x")
    if _core is None:
        print("\ncompiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
