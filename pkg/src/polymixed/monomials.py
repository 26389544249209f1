"""Monomial exponent sets and evaluation helpers.

All scalar polynomial spaces in the package are spanned by monomials in
coordinates shifted to a domain centroid and scaled by a half-diameter,
which keeps local matrices O(1) across refinement levels.
"""

import functools

import numpy as np

from ._kernels import monomial_eval


@functools.lru_cache(maxsize=None)
def pk_exponents(dim, k):
    """Exponent multi-indices of P_k in ``dim`` variables, graded order."""
    if k < 0:
        return np.zeros((0, dim), dtype=np.int64)
    exps = []
    if dim == 1:
        for d in range(k + 1):
            exps.append((d,))
    elif dim == 2:
        for d in range(k + 1):
            for i in range(d, -1, -1):
                exps.append((i, d - i))
    else:
        for d in range(k + 1):
            for i in range(d, -1, -1):
                for j in range(d - i, -1, -1):
                    exps.append((i, j, d - i - j))
    return np.array(exps, dtype=np.int64)


@functools.lru_cache(maxsize=None)
def homogeneous_exponents(dim, k):
    """Exponents of the homogeneous degree-k monomials."""
    exps = pk_exponents(dim, k)
    return np.ascontiguousarray(exps[exps.sum(axis=1) == k])


def pk_dim(dim, k):
    if k < 0:
        return 0
    if dim == 1:
        return k + 1
    if dim == 2:
        return (k + 1) * (k + 2) // 2
    return (k + 1) * (k + 2) * (k + 3) // 6


def eval_monomials(points, exps):
    """Values of each monomial at each point, shape (npts, nmono)."""
    if len(points) == 0 or len(exps) == 0:
        return np.zeros((len(points), len(exps)))
    return monomial_eval(points, exps)


def eval_monomial_gradients(points, exps):
    """Gradients, shape (npts, nmono, dim)."""
    points = np.asarray(points, dtype=float)
    npts, dim = points.shape
    out = np.zeros((npts, len(exps), dim))
    for axis in range(dim):
        e = np.array(exps, copy=True)
        coef = e[:, axis].astype(float)
        e[:, axis] = np.maximum(e[:, axis] - 1, 0)
        out[:, :, axis] = eval_monomials(points, e) * coef[None, :]
    return out


class ScaledBasis:
    """Monomial basis of P_k on a domain, centered and scaled.

    Basis member m is ((x - center) / scale) ** exps[m].
    """

    def __init__(self, dim, k, center, scale):
        self.dim = dim
        self.k = k
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.exps = pk_exponents(dim, k)

    def __len__(self):
        return len(self.exps)

    def local(self, points):
        return (np.asarray(points, dtype=float) - self.center) / self.scale

    def eval(self, points):
        return eval_monomials(self.local(points), self.exps)

    def eval_gradients(self, points):
        g = eval_monomial_gradients(self.local(points), self.exps)
        return g / self.scale
