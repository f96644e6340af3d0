"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time per backend and the speedup for nearest-level
search and histogram binning at a few sizes. Both backends must return
identical results; the script exits nonzero otherwise.
"""

import argparse
import sys
import timeit

import numpy as np

from quantmdp._kernels import _pykernels

try:
    from quantmdp._kernels import _ckernels
except ImportError:
    _ckernels = None


def _cases(rng):
    for n, k, d in [(10_000, 16, 1), (100_000, 256, 1), (20_000, 4096, 2), (20_000, 1000, 3)]:
        points = rng.uniform(-1, 1, (n, d))
        levels = rng.uniform(-1, 1, (k, d))
        yield f"nearest_brute n={n} k={k} d={d}", "nearest_brute", (points, levels)
    for n, bins, d in [(100_000, 50, 1), (1_000_000, 50, 1), (200_000, 20, 2)]:
        samples = rng.normal(size=(n, d))
        lo, hi = np.full(d, -3.0), np.full(d, 3.0)
        yield f"bin_counts    n={n} bins={bins} d={d}", "bin_counts", (samples, lo, hi, bins)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the numpy backend is available")
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels

    print(f"{'case':40s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup")
    mismatch = False
    for label, name, fargs in _cases(np.random.default_rng(args.seed)):
        times, results = {}, {}
        for b, mod in backends.items():
            fn = getattr(mod, name)
            results[b] = fn(*fargs)
            times[b] = min(timeit.repeat(lambda: fn(*fargs), number=1, repeat=args.repeat))
        if len(results) == 2 and not np.array_equal(results["python"], results["cython"]):
            mismatch = True
            label += "  MISMATCH"
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
        print(f"{label:40s} " + " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends) + "  " + speed)
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
