"""Timing comparison of the numba kernels against the pure-numpy fallback.

Run with:  python3 benchmarks/bench_kernels.py

The two hot kernels are monomial evaluation (used for every basis/quadrature
table) and the weighted Gram product (used for every local mass matrix).
Both backends are imported directly so the comparison runs in one process
regardless of the POLYMIXED_PURE_NUMPY setting.
"""

import time

import numpy as np

from polymixed._kernels import (
    HAS_NUMBA,
    monomial_eval_numpy,
    weighted_gram_numpy,
)
from polymixed.monomials import pk_exponents

if HAS_NUMBA:
    from polymixed._kernels import _monomial_eval_nb, _weighted_gram_nb


def timeit(fn, *args, repeat=200):
    fn(*args)  # warm up (includes JIT compilation for the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    rng = np.random.default_rng(7)
    print(f"numba available: {HAS_NUMBA}")
    for dim, k, nq in ((2, 3, 512), (3, 3, 2048)):
        exps = pk_exponents(dim, k)
        pts = rng.random((nq, dim))
        wts = rng.random(nq)
        t_np = timeit(monomial_eval_numpy, pts, exps)
        vals = rng.random((nq, len(exps), dim))
        g_np = timeit(weighted_gram_numpy, vals, wts)
        line = (
            f"dim={dim} k={k} nq={nq}:  "
            f"monomial_eval numpy {1e6 * t_np:8.1f} us"
        )
        if HAS_NUMBA:
            t_nb = timeit(_monomial_eval_nb, pts, exps)
            g_nb = timeit(_weighted_gram_nb, vals, wts)
            line += f", numba {1e6 * t_nb:8.1f} us ({t_np / t_nb:4.1f}x)"
            line += (
                f"  |  weighted_gram numpy {1e6 * g_np:8.1f} us,"
                f" numba {1e6 * g_nb:8.1f} us ({g_np / g_nb:4.1f}x)"
            )
            assert np.allclose(
                _monomial_eval_nb(pts, exps), monomial_eval_numpy(pts, exps)
            )
            assert np.allclose(
                _weighted_gram_nb(vals, wts), weighted_gram_numpy(vals, wts)
            )
        else:
            line += f"  |  weighted_gram numpy {1e6 * g_np:8.1f} us"
        print(line)


if __name__ == "__main__":
    main()
