"""Numerical integration on reference and physical simplices.

Rules are built from tensor Gauss / Gauss-Jacobi points collapsed onto the
reference simplex (Duffy transform), which is exact for the requested total
polynomial degree.  Rules are cached per (dim, degree); tests validate them
against symbolic monomial moments.
"""

import functools

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import DegenerateSimplex, UnsupportedDegree

MAX_DEGREE = 14

#: measure of the unit reference simplex per dimension
REFERENCE_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


class QuadRule:
    """Quadrature rule on the reference simplex.

    Attributes
    ----------
    dim, degree : int
    points : (n, dim+1) barycentric coordinates
    weights : (n,) weights summing to the reference simplex measure
    """

    def __init__(self, dim, degree, points, weights):
        self.dim = dim
        self.degree = degree
        self.points = points
        self.weights = weights

    @property
    def reference_points(self):
        """Points in reference coordinates (drop the first barycentric)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


def _gauss01(n):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _jacobi01(n, alpha):
    # weight (1-x)^alpha on [0,1]
    x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + 1)


@functools.lru_cache(maxsize=None)
def simplex_rule(dim, degree):
    """Rule exact for total degree <= ``degree`` on the reference simplex."""
    if dim not in (1, 2, 3):
        raise UnsupportedDegree(f"unsupported dimension {dim}")
    if not 0 <= degree <= MAX_DEGREE:
        raise UnsupportedDegree(f"degree {degree} outside [0, {MAX_DEGREE}]")
    n = degree // 2 + 1
    if dim == 1:
        x, w = _gauss01(n)
        pts = x[:, None]
        wts = w
    elif dim == 2:
        xi, wxi = _jacobi01(n, 1.0)
        eta, weta = _gauss01(n)
        X, Y = np.meshgrid(xi, eta, indexing="ij")
        W = np.outer(wxi, weta)
        pts = np.column_stack([X.ravel(), (Y * (1.0 - X)).ravel()])
        wts = W.ravel()
    else:
        xi, wxi = _jacobi01(n, 2.0)
        eta, weta = _jacobi01(n, 1.0)
        zeta, wz = _gauss01(n)
        X, Y, Z = np.meshgrid(xi, eta, zeta, indexing="ij")
        W = wxi[:, None, None] * weta[None, :, None] * wz[None, None, :]
        x = X.ravel()
        y = (Y * (1.0 - X)).ravel()
        z = (Z * (1.0 - X) * (1.0 - Y)).ravel()
        pts = np.column_stack([x, y, z])
        wts = W.ravel()
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    return QuadRule(dim, degree, bary, wts)


def map_to_simplex(rule, vertices):
    """Physical quadrature points and weights for a simplex.

    ``vertices`` is (dim+1, gdim).  Returns (points (n, gdim), weights (n,))
    with weights scaled by the simplex measure ratio.  Supports simplices
    embedded in higher dimension (faces), where the Gram determinant is used.
    """
    vertices = np.asarray(vertices, dtype=float)
    d = rule.dim
    if vertices.shape[0] != d + 1:
        raise ValueError("vertex count does not match rule dimension")
    jac = (vertices[1:] - vertices[0]).T  # (gdim, d)
    if jac.shape[0] == d:
        detj = abs(np.linalg.det(jac))
    else:
        detj = np.sqrt(np.linalg.det(jac.T @ jac))
    scale = float(np.abs(vertices).max()) or 1.0
    if detj < 1e-14 * scale**d:
        raise DegenerateSimplex(f"simplex measure {detj:g} below tolerance")
    pts = rule.points @ vertices
    # weights sum to the reference measure; |det J| rescales to the
    # physical simplex measure.
    return pts, rule.weights * detj


def integrate(f, vertices, rule):
    """Integrate a callable over a physical simplex.

    ``f`` maps an (n, gdim) point array to scalars (n,) or vectors (n, m);
    vector values are integrated componentwise.
    """
    pts, wts = map_to_simplex(rule, vertices)
    vals = np.asarray(f(pts), dtype=float)
    if vals.ndim == 1:
        return float(wts @ vals)
    return wts @ vals
