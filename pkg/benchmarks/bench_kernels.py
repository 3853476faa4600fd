"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from bellwether import _pycore
from bellwether.learners.network import init_parameters, layer_sizes

try:
    from bellwether import _ccore
except ImportError:
    _ccore = None


def cases(rng):
    seq = rng.integers(0, 12, 5000).astype(np.intp)
    X = rng.normal(size=(2000, 4))
    C = rng.normal(size=(8, 4))
    sizes = layer_sizes(3, (8,))
    theta = init_parameters(sizes, rng)
    Xn = rng.uniform(0, 1, (250, 3))
    return {
        "count_transitions (n=5000)": lambda m: m.count_transitions(seq, 12),
        "nearest_centroid (2000x4, k=8)": lambda m: m.nearest_centroid(X, C),
        "mlp_forward (250x3, hidden 8)": lambda m: m.mlp_forward(theta, sizes, Xn),
        "mlp_jacobian (250x3, hidden 8)": lambda m: m.mlp_jacobian(theta, sizes, Xn),
    }


def best_time(fn, module, repeat, number):
    return min(timeit.repeat(lambda: fn(module), repeat=repeat, number=number)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=20)
    args = parser.parse_args()
    if _ccore is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':34s} {'numpy (us)':>12s} {'cython (us)':>12s} {'speed-up':>9s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        py = best_time(fn, _pycore, args.repeat, args.number) * 1e6
        if _ccore is None:
            print(f"{name:34s} {py:12.1f} {'n/a':>12s} {'n/a':>9s}")
            continue
        cy = best_time(fn, _ccore, args.repeat, args.number) * 1e6
        print(f"{name:34s} {py:12.1f} {cy:12.1f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
