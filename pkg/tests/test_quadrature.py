"""Quadrature oracles: exact monomial moments on reference simplices are
computed independently with sympy and compared against the rules."""

import numpy as np
import pytest
import sympy as sp

from polymixed.errors import DegenerateSimplex, UnsupportedDegree
from polymixed.quadrature import (
    MAX_DEGREE,
    integrate,
    map_to_simplex,
    simplex_rule,
)

REF = {
    1: np.array([[0.0], [1.0]]),
    2: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    3: np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float),
}


def sympy_moment(dim, exps):
    """Exact integral of x^a y^b z^c over the unit reference simplex."""
    x, y, z = sp.symbols("x y z")
    if dim == 1:
        return float(sp.integrate(x ** exps[0], (x, 0, 1)))
    if dim == 2:
        return float(
            sp.integrate(x ** exps[0] * y ** exps[1], (y, 0, 1 - x), (x, 0, 1))
        )
    return float(
        sp.integrate(
            x ** exps[0] * y ** exps[1] * z ** exps[2],
            (z, 0, 1 - x - y),
            (y, 0, 1 - x),
            (x, 0, 1),
        )
    )


def test_first_moment_triangle():
    # int_T x dA = 1/6 on the unit triangle
    pts, wts = map_to_simplex(simplex_rule(2, 3), REF[2])
    assert np.isclose(wts @ pts[:, 0], 1.0 / 6.0, atol=1e-15)


def test_xyz_moment_tet():
    # int_T xyz dV = 1/720 on the unit tetrahedron
    pts, wts = map_to_simplex(simplex_rule(3, 5), REF[3])
    assert np.isclose(wts @ np.prod(pts, axis=1), 1.0 / 720.0, atol=1e-16)


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("degree", [1, 3, 5, 8, 14])
def test_monomial_exactness(dim, degree):
    pts, wts = map_to_simplex(simplex_rule(dim, degree), REF[dim])
    rng = np.random.default_rng(7)
    for _ in range(6):
        exps = rng.integers(0, degree + 1, size=dim)
        while exps.sum() > degree:
            exps = rng.integers(0, degree + 1, size=dim)
        val = wts @ np.prod(pts ** exps[None, :], axis=1)
        assert np.isclose(val, sympy_moment(dim, exps), rtol=1e-13, atol=1e-16)


def test_weights_positive_and_sum():
    for dim, meas in ((1, 1.0), (2, 0.5), (3, 1.0 / 6.0)):
        rule = simplex_rule(dim, 9)
        assert np.all(rule.weights > 0)
        assert np.isclose(rule.weights.sum(), meas, atol=1e-14)


def test_affine_invariance():
    # integrating a polynomial over a mapped simplex equals the exact value
    x, y = sp.symbols("x y")
    poly = 3 + 2 * x - y + x**2 * y
    verts = np.array([[0.25, 0.125], [1.0, 0.5], [0.375, 1.0]])
    exact = float(_exact_over_triangle(poly, verts))
    fn = sp.lambdify((x, y), poly, "numpy")
    val = integrate(lambda p: fn(p[:, 0], p[:, 1]), verts, simplex_rule(2, 5))
    assert np.isclose(val, exact, rtol=1e-13)


def _exact_over_triangle(poly, verts):
    # map the reference triangle and integrate symbolically
    x, y, s, t = sp.symbols("x y s t")
    v0, v1, v2 = [sp.Matrix(v) for v in verts]
    pt = v0 + s * (v1 - v0) + t * (v2 - v0)
    jac = sp.Abs((v1 - v0)[0] * (v2 - v0)[1] - (v1 - v0)[1] * (v2 - v0)[0])
    mapped = poly.subs({x: pt[0], y: pt[1]}, simultaneous=True)
    return sp.integrate(mapped * jac, (t, 0, 1 - s), (s, 0, 1))


def test_unsupported_degree():
    with pytest.raises(UnsupportedDegree):
        simplex_rule(2, MAX_DEGREE + 1)


def test_degenerate_simplex():
    verts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(DegenerateSimplex):
        map_to_simplex(simplex_rule(2, 2), verts)


def test_embedded_face_measure():
    # 2D rule mapped onto a triangle embedded in 3D: weights sum to its area
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    _, wts = map_to_simplex(simplex_rule(2, 2), verts)
    assert np.isclose(wts.sum(), 0.5, atol=1e-14)
