"""Projections onto the discrete spaces.

Pi_h: velocity projection defined by matching the functional DOF rows of
Lambda_k (boundary-piece normal moments, n1-moments on T, n2/n3-moments on
the sub-simplices).  Q_h: elementwise L2 projection onto P_k(T).

The commuting property div(Pi_h q) = Q_h(div q) is checked in
integration-by-parts form: both sides are reduced to the same face and
volume moments of q, evaluated with the same quadrature rule, so the defect
cancels structurally instead of being limited by quadrature error on
div q itself.
"""

import numpy as np

from .monomials import eval_monomial_gradients


def project_velocity(problem, qfun):
    """Global coefficient vector of Pi_h qfun (qfun must be H(div)-regular,
    so shared face moments agree from both sides)."""
    coeffs = np.zeros(problem.num_vdofs)
    for c in range(problem.mesh.num_cells):
        cls = problem.cache.cell_class[c]
        loc = cls.dof_values(qfun, problem.cache.cell_anchor[c])
        coeffs[problem.cell_vdofs[c]] = problem.cell_signs[c] * loc
    return coeffs


def project_scalar(problem, ufun):
    """Global coefficient vector of Q_h ufun (cellwise P_k coefficients)."""
    coeffs = np.zeros(problem.num_pdofs)
    for c in range(problem.mesh.num_cells):
        cls = problem.cache.cell_class[c]
        sl = problem.cell_pdofs(c)
        coeffs[sl] = cls.project_scalar(ufun, problem.cache.cell_anchor[c])
    return coeffs


def commuting_defect(problem, qfun):
    """max over cells and P_k test functions of
    |(div Pi_h q - Q_h div q, p)_T| / |T|, with the right-hand side in
    integration-by-parts form."""
    worst = 0.0
    for c in range(problem.mesh.num_cells):
        cls = problem.cache.cell_class[c]
        offset = problem.cache.cell_anchor[c]
        dofs = cls.dof_values(qfun, offset)
        lhs = cls.B @ dofs  # (div Pi_h q, p_m)_T
        rhs = np.zeros(cls.npk)
        # sum_F int_F (q.n) p  -  sum_i int_{T_i} q . grad p
        for pts, wts, fvals, normal, sign, area, s in cls.bpiece_data:
            qn = qfun(pts + offset) @ normal
            pv = cls.pk_at(pts)
            rhs += (pv * (wts * qn)[:, None]).sum(axis=0)
        for s in range(cls.n):
            qv = qfun(cls.vol_pts[s] + offset)
            grads = eval_monomial_gradients(
                (cls.vol_pts[s] - cls.center) / cls.scale, cls.pk_exp
            ) / cls.scale
            rhs -= np.einsum("qd,qmd,q->m", qv, grads, cls.vol_wts[s])
        worst = max(worst, np.abs(lhs - rhs).max() / cls.measure)
    return worst


def conformity_jump(problem, coeffs):
    """max over interior face pieces of the normal-trace jump of the field
    with global coefficients `coeffs`, sampled at face quadrature points."""
    mesh = problem.mesh
    traces = {}
    worst = 0.0
    for c in range(mesh.num_cells):
        cls = problem.cache.cell_class[c]
        loc = problem.cell_signs[c] * coeffs[problem.cell_vdofs[c]]
        cverts = mesh.cells[c]
        for p, (piece, s) in enumerate(cls.bpieces):
            gpiece = frozenset(int(cverts[i]) for i in piece)
            fid, _ = mesh.piece_index()[gpiece]
            if mesh.is_boundary_face(fid):
                continue
            sign = cls.bpiece_data[p][4]
            tr = sign * (cls.bpiece_basis[p] @ loc)  # trace w.r.t. global normal
            if gpiece in traces:
                worst = max(worst, np.abs(tr - traces.pop(gpiece)).max())
            else:
                traces[gpiece] = tr
    if traces:
        raise AssertionError("unmatched interior face pieces")
    return worst


def idempotence_defect(problem, coeffs):
    """max |Pi_h applied to a discrete field - the field| over DOFs: the
    functional rows are re-evaluated through the quadrature machinery."""
    out = 0.0
    for c in range(problem.mesh.num_cells):
        cls = problem.cache.cell_class[c]
        loc = problem.cell_signs[c] * coeffs[problem.cell_vdofs[c]]
        redo = cls.dof_values_of_coeffs(loc)
        out = max(out, np.abs(redo - loc).max())
    return out
