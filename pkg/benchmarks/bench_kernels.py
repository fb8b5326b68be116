#!/usr/bin/env python3
"""Compare the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

import argparse
import time

import numpy as np

from dermkit.imaging.distortion import gaussian_taps
from dermkit.imaging.kernels import compiled_available, pyimpl


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=1024)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not compiled_available():
        raise SystemExit("compiled backend not built; run "
                         "`python setup.py build_ext --inplace` first")
    from dermkit.imaging.kernels import _cyimpl

    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (args.size, args.size, 3), dtype=np.uint8)
    taps = gaussian_taps(3.0)
    lum = pyimpl.luminance(img)

    cases = [
        ("gaussian_blur s=3", lambda m: m.gaussian_blur(img, taps)),
        ("box_down_up /4", lambda m: m.box_down_up(img, args.size // 4, args.size // 4)),
        ("exposure x1.7", lambda m: m.exposure_scale(img, 1.7)),
        ("block_quantize 64", lambda m: m.block_quantize(img, 64.0)),
        ("luminance", lambda m: m.luminance(img)),
        ("feature_stats", lambda m: m.feature_stats(np.ascontiguousarray(lum))),
    ]

    print(f"{args.size}x{args.size} RGB, best of {args.repeat}")
    print(f"{'kernel':<20}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for name, call in cases:
        t_py = timed(lambda: call(pyimpl), args.repeat)
        t_cy = timed(lambda: call(_cyimpl), args.repeat)
        print(f"{name:<20}{t_py * 1e3:>10.1f}ms{t_cy * 1e3:>10.1f}ms"
              f"{t_py / t_cy:>9.1f}x")

    blurred_py = pyimpl.gaussian_blur(img, taps)
    blurred_cy = np.asarray(_cyimpl.gaussian_blur(img, taps))
    print("\nbit-identical blur output:", np.array_equal(blurred_py, blurred_cy))


if __name__ == "__main__":
    main()
