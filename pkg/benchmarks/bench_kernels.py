"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one CSV row per (kernel, size): best wall time of each backend,
the speedup and the largest absolute difference between their outputs.
"""

import argparse
import sys
import timeit

import numpy as np

from poisbin import _pykernels

try:
    from poisbin import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    for n in (100, 1000, 10000):
        p = rng.random(n)
        yield "bernoulli_convolve", n, (p,)
    for n in (100, 1000):
        p = np.unique(rng.random(n))
        mult = np.ones_like(p)
        yield "contour_trapezoid", n, (p, mult, 1.0, n // 2, 4 * n)
    for n in (10**4, 10**6):
        yield "reverse_cumsum", n, (rng.random(n) * 1e-6,)


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10**4:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def max_diff(a, b):
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    return float(np.max(np.abs(a - b)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; run `pip install --no-build-isolation -e .`", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    print("kernel,n,cython_s,python_s,speedup,max_abs_diff")
    for name, n, kargs in cases(rng):
        fc, fp = getattr(_ckernels, name), getattr(_pykernels, name)
        tc = best_time(fc, kargs, args.repeat)
        tp = best_time(fp, kargs, args.repeat)
        diff = max_diff(fc(*kargs), fp(*kargs))
        print(f"{name},{n},{tc:.3e},{tp:.3e},{tp / tc:.1f},{diff:.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
