"""Compare the compiled and numpy backends on the two hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from uavheading import _pykernels

try:
    from uavheading import _ckernels
except ImportError:
    _ckernels = None


def workload(rng, n_samples=1000, n_users=4, m=4, grid=720):
    h = (rng.standard_normal((n_samples, n_users, m)) + 1j * rng.standard_normal((n_samples, n_users, m))) / np.sqrt(2)
    a = np.exp(1j * rng.uniform(0, np.pi, (grid, n_users, 1)) * np.arange(m))
    r = np.broadcast_to(np.eye(m, dtype=complex), (grid, n_users, m, m)).copy()
    gain = rng.uniform(0.05, 2.0, (grid, n_users))
    return h, a, r, gain


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    h, a, r, gain = workload(np.random.default_rng(0))
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled backend not built; timing numpy only")

    print(f"{'kernel':<22}{'backend':<10}{'ms/call':>10}")
    results = {}
    for name, mod in backends.items():
        for kernel, call in (
            ("sinr_batch", lambda m=mod: m.sinr_batch(h, 1e3)),
            ("jensen_bound_batch", lambda m=mod: m.jensen_bound_batch(a, r, gain, 10 / 11, 1 / 11)),
        ):
            t = min(timeit.repeat(call, number=1, repeat=args.repeat)) * 1e3
            results[kernel, name] = t
            print(f"{kernel:<22}{name:<10}{t:>10.3f}")
    if _ckernels is not None:
        for kernel in ("sinr_batch", "jensen_bound_batch"):
            print(f"{kernel} speedup: {results[kernel, 'python'] / results[kernel, 'cython']:.1f}x")
        np.testing.assert_allclose(_ckernels.sinr_batch(h, 1e3), _pykernels.sinr_batch(h, 1e3), rtol=1e-10)


if __name__ == "__main__":
    main()
