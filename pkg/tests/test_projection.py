"""Projections Pi_h and Q_h: idempotence, commuting property, conformity."""

import numpy as np
import pytest

from polymixed import mesh as M
from polymixed import projection as P
from polymixed.assembly import DiscreteProblem, manufactured_case


@pytest.fixture(scope="module")
def prob2d():
    return DiscreteProblem(M.make_quad_grid(3), 1)


@pytest.fixture(scope="module")
def prob3d():
    return DiscreteProblem(M.make_wedge_grid(2), 0)


def test_scalar_projection_reproduces_pk(prob2d):
    # Q_h p = p for cellwise-representable p; use a global quadratic? No:
    # k=1, so a global affine function is reproduced exactly
    def u(pts):
        return 2.0 - 3.0 * pts[:, 0] + 0.5 * pts[:, 1]

    coeffs = P.project_scalar(prob2d, u)
    assert prob2d.error_pressure(coeffs, u) < 1e-13


def test_velocity_projection_idempotent(prob2d, prob3d):
    for prob, case in (
        (prob2d, manufactured_case("trig2d")),
        (prob3d, manufactured_case("poly3d")),
    ):
        Pq = P.project_velocity(prob, case.q)
        assert P.idempotence_defect(prob, Pq) < 1e-11


def test_commuting_property(prob2d, prob3d):
    assert P.commuting_defect(prob2d, manufactured_case("trig2d").q) < 1e-10
    assert P.commuting_defect(prob3d, manufactured_case("poly3d").q) < 1e-10


def test_projection_is_conforming(prob2d, prob3d):
    for prob, case in (
        (prob2d, manufactured_case("trig2d")),
        (prob3d, manufactured_case("poly3d")),
    ):
        Pq = P.project_velocity(prob, case.q)
        assert P.conformity_jump(prob, Pq) < 1e-10


def test_projection_approximation_order():
    # ||Pi_h q - q|| decreases by about 2^(k+1) per level
    case = manufactured_case("trig2d")
    errs = []
    for level in (3, 4, 5):
        prob = DiscreteProblem(M.make_quad_grid(level), 1)
        Pq = P.project_velocity(prob, case.q)
        errs.append(prob.error_velocity(Pq, case.q))
    rate = np.log2(errs[-2] / errs[-1])
    assert 1.8 < rate < 2.2


def test_scalar_projection_order():
    case = manufactured_case("trig2d")
    errs = []
    for level in (3, 4, 5):
        prob = DiscreteProblem(M.make_quad_grid(level), 0)
        Qu = P.project_scalar(prob, case.u)
        errs.append(prob.error_pressure(Qu, case.u))
    rate = np.log2(errs[-2] / errs[-1])
    assert 0.9 < rate < 1.1
