"""Benchmark the compiled raster kernels against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats N]

Both backends are timed on identical inputs; the table reports the best
wall time over the repeats plus the speedup of the compiled path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shrimpmorph import _kernels
from shrimpmorph._kernels import numpy_backend

CASES = [
    ("render 23 kp @ 24x32", "render", (23, 24, 32)),
    ("render 23 kp @ 48x64", "render", (23, 48, 64)),
    ("render 23 kp @ 96x128", "render", (23, 96, 128)),
    ("decode 23 maps @ 24x32", "decode", (23, 24, 32)),
    ("decode 23 maps @ 48x64", "decode", (23, 48, 64)),
    ("decode 23 maps @ 96x128", "decode", (23, 96, 128)),
]


def best_time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _kernels.BACKEND != "cython":
        print("compiled backend unavailable; timing the numpy fallback against itself")
    compiled = _kernels

    rng = np.random.default_rng(0)
    print(f"{'case':<26} {'numpy':>12} {'compiled':>12} {'speedup':>9}")
    for label, op, (n, h, w) in CASES:
        centers = np.stack([rng.uniform(1, w - 2, n), rng.uniform(1, h - 2, n)], axis=1)
        if op == "render":
            f_np = lambda: numpy_backend.render_gaussians(centers, 2.0, h, w)
            f_c = lambda: compiled.render_gaussians(centers, 2.0, h, w)
        else:
            maps = np.asarray(numpy_backend.render_gaussians(centers, 2.0, h, w))
            f_np = lambda: numpy_backend.decode_peaks(maps)
            f_c = lambda: compiled.decode_peaks(maps)
        # agreement check before timing
        np.testing.assert_allclose(np.asarray(f_c()), np.asarray(f_np()), atol=1e-10)
        t_np = best_time(f_np, args.repeats)
        t_c = best_time(f_c, args.repeats)
        print(f"{label:<26} {t_np * 1e3:>10.3f}ms {t_c * 1e3:>10.3f}ms {t_np / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
