"""Compare the compiled series kernels with the numpy fallback.

Usage::

    python3 benchmarks/bench_core.py [--repeat 5]

Prints one line per kernel with the best wall time of each backend, the
speedup and the largest absolute disagreement.
"""

import argparse
import timeit

import numpy as np

from diffquad import _core_py

try:
    from diffquad import _core
except ImportError:  # extension not built
    _core = None


def cases(rng):
    L = 4096
    a = rng.standard_normal(L) / (1.0 + np.arange(L)) ** 2
    delta = rng.uniform(0, np.pi, 2000)
    c = rng.standard_normal(512) / (1.0 + np.arange(512)) ** 2
    t = rng.uniform(-1, 1, 4000)
    coef2 = rng.standard_normal((65, 65)) / (1.0 + np.add.outer(np.arange(65), np.arange(65))) ** 3
    d1 = rng.uniform(0, np.pi, 1000)
    d2 = rng.uniform(0, np.pi, 1000)
    v = rng.standard_normal(5000)
    return [
        ("cos_series L=4096 x 2000", "cos_series", (a, delta)),
        ("legendre_series L=512 x 4000", "legendre_series", (c, t)),
        ("cos_series_2d 65x65 x 1000", "cos_series_2d", (coef2, d1, d2)),
        ("project_simplex M=5000", "project_simplex", (v,)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _core is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max |diff|':>11s}")
    for label, name, inputs in cases(rng):
        fast, slow = getattr(_core, name), getattr(_core_py, name)
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(fast(*inputs)) - np.asarray(slow(*inputs)))))
        print(f"{label:34s} {1e3 * t_slow:11.2f} {1e3 * t_fast:12.2f} {t_slow / t_fast:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
