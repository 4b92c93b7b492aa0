#!/usr/bin/env python3
"""Benchmark the numba-jitted vision kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

The jitted path is compiled (and warmed) before timing; the reported numbers
are best-of-N wall times per call.
"""

import argparse
import time

import numpy as np

from vestbed.vision import cnn, kernels, preprocess


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_pair(name, numpy_fn, numba_fn, repeats):
    t_np = best_of(numpy_fn, repeats)
    if numba_fn is None:
        print(f"{name:<28} numpy {t_np * 1e3:8.2f} ms   numba        n/a")
        return
    numba_fn()  # warm the JIT outside the timed region
    t_nb = best_of(numba_fn, repeats)
    ratio = t_np / t_nb if t_nb > 0 else float("inf")
    print(f"{name:<28} numpy {t_np * 1e3:8.2f} ms   numba {t_nb * 1e3:8.2f} ms"
          f"   speedup x{ratio:5.2f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    has_numba = kernels.ACTIVE_IMPL == "numba"
    print(f"active kernel implementation: {kernels.ACTIVE_IMPL}")
    if not has_numba:
        print("numba unavailable or disabled (VESTBED_KERNELS); "
              "showing numpy only")

    rng = np.random.default_rng(0)

    x = rng.standard_normal((128, 128, 8)).astype(np.float32)
    k = rng.standard_normal((3, 3, 8, 16)).astype(np.float32)
    b = rng.standard_normal(16).astype(np.float32)
    bench_pair("conv2d 128x128x8 -> 16",
               lambda: kernels.conv2d_same_numpy(x, k, b),
               (lambda: kernels.conv2d_same_numba(x, k, b)) if has_numba else None,
               args.repeats)

    deep = rng.standard_normal((4, 4, 128)).astype(np.float32)
    kd = rng.standard_normal((3, 3, 128, 256)).astype(np.float32)
    bd = rng.standard_normal(256).astype(np.float32)
    bench_pair("conv2d 4x4x128 -> 256",
               lambda: kernels.conv2d_same_numpy(deep, kd, bd),
               (lambda: kernels.conv2d_same_numba(deep, kd, bd)) if has_numba else None,
               args.repeats)

    img = rng.standard_normal((360, 640))
    w11 = preprocess.gaussian_weights(11, 2.0)
    bench_pair("sepfilter 360x640 w=11",
               lambda: kernels.sepfilter_numpy(img, w11),
               (lambda: kernels.sepfilter_numba(img, w11)) if has_numba else None,
               args.repeats)

    pool_in = rng.standard_normal((128, 128, 8)).astype(np.float32)
    bench_pair("maxpool2 128x128x8",
               lambda: kernels.maxpool2_numpy(pool_in),
               (lambda: kernels.maxpool2_numba(pool_in)) if has_numba else None,
               args.repeats)

    weights = cnn.generate_weights(0)
    frame = (rng.random((360, 640, 3)) * 255).round()
    bench_pair("full classify 640x360",
               lambda: cnn.classify(frame, weights),
               None, args.repeats)
    print("(full classify uses the active implementation: "
          f"{kernels.ACTIVE_IMPL})")


if __name__ == "__main__":
    main()
