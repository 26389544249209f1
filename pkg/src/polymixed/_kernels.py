"""Hot numeric kernels: monomial evaluation and weighted Gram accumulation.

Both kernels exist in a pure-numpy variant and a numba ``@njit`` variant.
The numba path is used by default when numba imports cleanly; setting the
environment variable ``POLYMIXED_PURE_NUMPY=1`` forces the numpy fallback
(useful for debugging and for the benchmark in ``benchmarks/``).
"""

import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "USE_NUMBA",
    "monomial_eval",
    "monomial_eval_numpy",
    "weighted_gram",
    "weighted_gram_numpy",
]


def monomial_eval_numpy(points, exps):
    """Evaluate monomials x^a at many points.

    points: (npts, dim) float array; exps: (nmono, dim) integer array.
    Returns (npts, nmono).
    """
    # 0**0 == 1 under numpy power, which is what monomials need.
    return np.prod(points[:, None, :] ** exps[None, :, :], axis=2)


def weighted_gram_numpy(values, weights):
    """Accumulate sum_q w_q * values[q,a,:] . values[q,b,:].

    values: (nq, nb, d); weights: (nq,). Returns (nb, nb).
    """
    vw = values * weights[:, None, None]
    return np.einsum("qad,qbd->ab", vw, values)


try:  # pragma: no cover - exercised indirectly
    import numba

    HAS_NUMBA = True

    @numba.njit(cache=True)
    def _monomial_eval_nb(points, exps):
        npts, dim = points.shape
        nmono = exps.shape[0]
        out = np.empty((npts, nmono))
        for q in range(npts):
            for m in range(nmono):
                v = 1.0
                for k in range(dim):
                    e = exps[m, k]
                    x = points[q, k]
                    p = 1.0
                    for _ in range(e):
                        p *= x
                    v *= p
                out[q, m] = v
        return out

    @numba.njit(cache=True)
    def _weighted_gram_nb(values, weights):
        nq, nb, d = values.shape
        out = np.zeros((nb, nb))
        for q in range(nq):
            w = weights[q]
            for a in range(nb):
                for b in range(a, nb):
                    s = 0.0
                    for k in range(d):
                        s += values[q, a, k] * values[q, b, k]
                    out[a, b] += w * s
        for a in range(nb):
            for b in range(a):
                out[a, b] = out[b, a]
        return out

except ImportError:  # pragma: no cover
    HAS_NUMBA = False
    _monomial_eval_nb = None
    _weighted_gram_nb = None

USE_NUMBA = HAS_NUMBA and os.environ.get("POLYMIXED_PURE_NUMPY", "") != "1"


def monomial_eval(points, exps):
    points = np.ascontiguousarray(points, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    if USE_NUMBA:
        return _monomial_eval_nb(points, exps)
    return monomial_eval_numpy(points, exps)


def weighted_gram(values, weights):
    values = np.ascontiguousarray(values, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if USE_NUMBA:
        return _weighted_gram_nb(values, weights)
    return weighted_gram_numpy(values, weights)
