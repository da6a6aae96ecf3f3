"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on the same inputs by both backends; the outputs
are compared before any timing is reported.
"""

import argparse
import math
import timeit

import numpy as np

from sirkit import _kernels_py

try:
    from sirkit import _kernels
except ImportError:
    _kernels = None


def cascade_case(rng, n_el=12, n_f=4001):
    return (rng.standard_normal((n_el, n_f, 2, 2)) + 1j * rng.standard_normal((n_el, n_f, 2, 2)),)


def notch_case(rng, n_f=4001):
    f = np.linspace(5.99e9, 6.01e9, n_f)
    return (f, 0.7, 0.3, 40e-9, 6e9, 8e4, 2e5, 0.2, 6e9)


def roots_case(rng):
    return (0.54, 1.0, 40 * math.pi, math.pi / 1000, 1e-13)


CASES = [
    ("cascade", cascade_case),
    ("notch_model", notch_case),
    ("tan_product_roots", roots_case),
]


def best_time(fn, args, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    runs = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(runs) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for name, make in CASES:
        inputs = make(rng)
        py_fn, cy_fn = getattr(_kernels_py, name), getattr(_kernels, name)
        np.testing.assert_allclose(cy_fn(*inputs), py_fn(*inputs), rtol=1e-10, atol=1e-12)
        t_py = best_time(py_fn, inputs, args.repeat)
        t_cy = best_time(cy_fn, inputs, args.repeat)
        print(f"{name:<20}{1e3 * t_py:>14.4f}{1e3 * t_cy:>14.4f}{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
