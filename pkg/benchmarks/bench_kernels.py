"""Time the compiled and numpy kernel backends on sign-sized and larger rasters.

    python benchmarks/bench_kernels.py [--sizes 48 128 256] [--repeat 5]

Prints one row per (kernel, size) with the best-of-N time per call for each
backend, the speedup, and whether the two outputs are bit-identical.
"""

import argparse
import timeit

import numpy as np

from signsynth import _kernels_py
from signsynth.augment.transforms import gaussian_kernel, rotation_matrix

try:
    from signsynth import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(size, rng):
    img = rng.random((size, size, 3)) * 255.0
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    m = np.linalg.inv(rotation_matrix(17.0, size, size))
    pts = m @ np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)])
    mx = (pts[0] / pts[2]).reshape(size, size)
    my = (pts[1] / pts[2]).reshape(size, size)
    fill = np.zeros(3)
    k = gaussian_kernel(1.2)
    u8 = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    return {
        "remap": lambda b: b.remap(img, mx, my, fill, True),
        "blur": lambda b: b.blur(img, k),
        "morph": lambda b: b.morph(u8, 2, True),
    }


def best(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[48, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _compiled is None:
        print("compiled backend not built; timing the numpy backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<7} {'size':>5} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}  identical")
    for size in args.sizes:
        for name, run in cases(size, rng).items():
            t_py = best(lambda: run(_kernels_py), args.repeat) * 1e3
            if _compiled is None:
                print(f"{name:<7} {size:>5} {t_py:>10.3f} {'-':>10} {'-':>8}  -")
                continue
            t_cy = best(lambda: run(_compiled), args.repeat) * 1e3
            same = np.array_equal(run(_kernels_py), run(_compiled))
            print(f"{name:<7} {size:>5} {t_py:>10.3f} {t_cy:>10.3f} {t_py / t_cy:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
