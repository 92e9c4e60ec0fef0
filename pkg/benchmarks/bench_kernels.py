"""Benchmark the compiled kernels against the NumPy fallback.

Run: python benchmarks/bench_kernels.py [--repeats 50]
"""

import argparse
import time

import numpy as np

from teachkit import kernels
from teachkit.vision import luma


def bench(fn, repeats):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    backends = kernels.available_backends()
    if "fast" not in backends:
        print("compiled kernels not built; benchmarking the fallback alone")

    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(480, 640, 3), dtype=np.uint8)
    frame96 = rng.integers(0, 256, size=(96, 96, 3), dtype=np.uint8)
    lum96 = np.ascontiguousarray(luma(frame96))
    mask = (rng.random((480, 640)) < 0.3).astype(np.uint8)
    scene = rng.random((120, 160)) * 255.0
    templ = rng.random((24, 24)) * 255.0

    cases = [
        ("resize 640x480 -> 96x96",
         lambda impl: impl.resize_bilinear_rgb(frame, 96, 96)),
        ("color histograms 96x96",
         lambda impl: impl.color_cell_counts(frame96, 4, 4)),
        ("gradient cells 96x96",
         lambda impl: impl.gradient_cell_sums(lum96, 4)),
        ("blob labeling 640x480",
         lambda impl: impl.label_components(mask)),
        ("NCC 160x120 / 24x24",
         lambda impl: impl.ncc_score_map(scene, templ)),
    ]

    names = list(backends)
    header = f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, call in cases:
        times = {}
        for name in names:
            impl = backends[name]
            times[name] = bench(lambda: call(impl), args.repeats)
        row = f"{label:<28}" + "".join(f"{times[n] * 1e3:>10.3f}ms" for n in names)
        if "fast" in times and "numpy" in times:
            row += f"{times['numpy'] / times['fast']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
