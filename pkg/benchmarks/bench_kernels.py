"""Timing comparison of the jit kernels against their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``.  The jit column appears
only when numba is importable and not disabled via MEMEFUSE_NUMBA=0; the
first jit call is excluded from timing so compilation cost is not counted.
"""

import time

import numpy as np

from memefuse import kernels


def best_of(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    big = rng.integers(0, 256, (480, 640, 3)).astype(np.uint8)
    img = rng.integers(0, 256, (224, 224, 3)).astype(np.uint8)
    a = rng.standard_normal((600, 502))
    b = rng.standard_normal((600, 502))
    resize_out = np.empty((224, 224, 3), dtype=np.uint8)
    hist_out = lambda: np.zeros((2, 2, 3, 32), dtype=np.float64)
    dist_out = np.empty((600, 600), dtype=np.float64)
    return [
        (
            "resize_bilinear 480x640 -> 224x224",
            20,
            lambda: kernels._resize_bilinear_np(big, 224, 224),
            lambda: kernels._resize_bilinear_jit(big, 224, 224, resize_out),
        ),
        (
            "cell_histograms 224x224, 2x2x32",
            50,
            lambda: kernels._cell_histograms_np(img, 2, 2, 32),
            lambda: kernels._cell_histograms_jit(img, 2, 2, 32, hist_out()),
        ),
        (
            "pairwise_sqdist 600x600, d=502",
            10,
            lambda: kernels._pairwise_sqdist_np(a, b),
            lambda: kernels._pairwise_sqdist_jit(a, b, dist_out),
        ),
    ]


def main():
    print(f"numba backend enabled: {kernels.NUMBA_ENABLED}")
    header = f"{'kernel':<36} {'numpy ms':>10}"
    if kernels.NUMBA_ENABLED:
        header += f" {'numba ms':>10} {'speedup':>8}"
    print(header)
    for name, reps, np_fn, jit_fn in workloads():
        np_ms = best_of(np_fn, reps) * 1e3
        line = f"{name:<36} {np_ms:>10.3f}"
        if kernels.NUMBA_ENABLED:
            jit_fn()  # warm up: compile outside the timed region
            jit_ms = best_of(jit_fn, reps) * 1e3
            line += f" {jit_ms:>10.3f} {np_ms / jit_ms:>7.1f}x"
        print(line)
    if not kernels.NUMBA_ENABLED:
        print("numba disabled or missing; unset MEMEFUSE_NUMBA to compare flavors")


if __name__ == "__main__":
    main()
