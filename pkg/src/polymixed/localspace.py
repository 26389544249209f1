"""Composite velocity space Lambda_k(T) on a subdivided polytopal cell.

A cell T is split into a chain-ordered simplex subdivision T_1..T_n.  On each
simplex we use the Raviart-Thomas space RT_k = [P_k]^d + x H_k.  The square
DOF matrix couples the piecewise-RT monomial basis to six row families:

  (1) moments of v.n against P_k(F) on each boundary face piece,
  (2) moments of v.n1 against P_{k-1}(T),
  (3) moments of v.n2 against P_{k-1}(T_i) per simplex,
  (4) moments of v.n3 against P_{k-1}(T_i) per simplex (3D only),
  (5) normal-jump moments against P_k(F) on internal faces,
  (6) divergence matching of each simplex against the first one.

Rows (1)-(4) are the functional degrees of freedom; rows (5)-(6) are the
homogeneous constraints.  Columns of the inverse matrix at the functional
rows form the assembly-ready dual basis of Lambda_k.

Everything built here depends only on the cell's shape, the relative order
of its global vertex indices, and k, so instances are cached per congruence
class (the built-in grids have exactly dyadic coordinates, making translated
cells bitwise-equal).
"""

import os

import numpy as np
import scipy.linalg

from .errors import FrameNotFound, SingularDofMatrix, UnsupportedDegree
from .mesh import PolytopalMesh, boundary_pieces, subdivide_cell
from .monomials import (
    eval_monomials,
    homogeneous_exponents,
    pk_dim,
    pk_exponents,
)
from .quadrature import map_to_simplex, simplex_rule

FRAME_DELTA = 1e-3
COND_LIMIT = 1e12


def quadrature_degree(k):
    """Default 2k+3, overridable via POLYMIXED_QUAD_DEGREE."""
    env = os.environ.get("POLYMIXED_QUAD_DEGREE", "")
    if env:
        return int(env)
    return 2 * k + 3


# -- frames ---------------------------------------------------------------


def _frame_candidates(dim, normals):
    cands = [np.eye(dim)[i] for i in range(dim)]
    cands.extend(normals)
    if dim == 2:
        golden = (np.sqrt(5.0) - 1.0) / 2.0
        for i in range(1, 33):
            t = np.pi * ((i * golden) % 1.0)
            cands.append(np.array([np.cos(t), np.sin(t)]))
    else:
        golden = (np.sqrt(5.0) - 1.0) / 2.0
        for i in range(1, 65):
            z = (i - 0.5) / 64.0
            r = np.sqrt(1.0 - z * z)
            t = 2.0 * np.pi * ((i * golden) % 1.0)
            cands.append(np.array([r * np.cos(t), r * np.sin(t), z]))
    return cands


def choose_frame(subdivision, vertices):
    """Orthonormal frame whose first vector is non-orthogonal (margin
    FRAME_DELTA) to every internal face normal of the subdivision."""
    dim = vertices.shape[1]
    normals = [f.normal for f in subdivision.internal_faces]
    if not normals:
        n1 = np.eye(dim)[0]
    else:
        best, best_score = None, -1.0
        for cand in _frame_candidates(dim, normals):
            score = min(abs(float(cand @ nrm)) for nrm in normals)
            if score > best_score:
                best, best_score = cand, score
        if best_score < FRAME_DELTA:
            raise FrameNotFound(
                f"no candidate direction achieves margin {FRAME_DELTA}"
            )
        n1 = best
    axis = np.eye(dim)[int(np.argmin(np.abs(n1)))]
    n2 = axis - (axis @ n1) * n1
    n2 = n2 / np.linalg.norm(n2)
    if dim == 2:
        return np.vstack([n1, n2])
    return np.vstack([n1, n2, np.cross(n1, n2)])


# -- piecewise RT basis ----------------------------------------------------


class RTSimplexBasis:
    """Monomial basis of RT_k on one simplex: [P_k]^d block then x.H_k block.

    Monomials are in scaled coordinates xh = (x - center)/scale shared by all
    simplices of the cell, so divergences live in one global P_k basis.
    """

    def __init__(self, dim, k, center, scale):
        self.dim = dim
        self.k = k
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.pk = pk_exponents(dim, k)
        self.hk = homogeneous_exponents(dim, k)
        self.npk = len(self.pk)
        self.size = dim * self.npk + len(self.hk)

    def _xhat(self, pts):
        return (np.asarray(pts) - self.center) / self.scale

    def eval(self, pts):
        """(nq, size, dim) values at physical points."""
        xh = self._xhat(pts)
        mono = eval_monomials(xh, self.pk)
        nq = xh.shape[0]
        vals = np.zeros((nq, self.size, self.dim))
        for j in range(self.dim):
            vals[:, j * self.npk : (j + 1) * self.npk, j] = mono
        if len(self.hk):
            hv = eval_monomials(xh, self.hk)
            vals[:, self.dim * self.npk :, :] = hv[:, :, None] * xh[:, None, :]
        return vals

    def div_coeffs(self):
        """(size, npk): divergence of each basis function in the scaled
        P_k monomial basis (exact)."""
        index = {tuple(int(a) for a in e): i for i, e in enumerate(self.pk)}
        coeffs = np.zeros((self.size, self.npk))
        for j in range(self.dim):
            for m, exp in enumerate(self.pk):
                if exp[j] == 0:
                    continue
                low = list(int(a) for a in exp)
                low[j] -= 1
                coeffs[j * self.npk + m, index[tuple(low)]] = exp[j] / self.scale
        for h, exp in enumerate(self.hk):
            key = tuple(int(a) for a in exp)
            coeffs[self.dim * self.npk + h, index[key]] = (
                self.dim + self.k
            ) / self.scale
        return coeffs


class FaceFrame:
    """In-plane coordinate system of a face piece; both incident cells build
    the identical frame because the vertex order is canonical (sorted by
    global index)."""

    def __init__(self, coords):
        coords = np.asarray(coords, dtype=float)
        self.center = coords.mean(axis=0)
        d = coords[:, None, :] - coords[None, :, :]
        self.diam = float(np.sqrt((d * d).sum(axis=2)).max())
        t1 = coords[1] - coords[0]
        t1 = t1 / np.linalg.norm(t1)
        if coords.shape[1] == 2:
            self.tangents = t1[None, :]
        else:
            t2 = coords[2] - coords[0]
            t2 = t2 - (t2 @ t1) * t1
            t2 = t2 / np.linalg.norm(t2)
            self.tangents = np.vstack([t1, t2])

    def local(self, pts):
        return ((np.asarray(pts) - self.center) @ self.tangents.T) / self.diam


def _outward_normal(simplex_coords, piece_coords):
    """Unit normal of a facet pointing away from the simplex interior."""
    dim = simplex_coords.shape[1]
    if dim == 2:
        t = piece_coords[1] - piece_coords[0]
        n = np.array([t[1], -t[0]])
    else:
        n = np.cross(
            piece_coords[1] - piece_coords[0], piece_coords[2] - piece_coords[0]
        )
    n = n / np.linalg.norm(n)
    inside = simplex_coords.mean(axis=0) - piece_coords.mean(axis=0)
    if n @ inside > 0:
        n = -n
    return n


def _lex_positive(n):
    for comp in n:
        if comp > 1e-12:
            return True
        if comp < -1e-12:
            return False
    return True


# -- the cached per-congruence-class object --------------------------------


class CellClass:
    """All local constructions for one congruence class of cells.

    Coordinates are stored relative to the cell anchor (componentwise min of
    the vertex coordinates), which is translation-equivariant and exact on
    dyadic meshes.
    """

    def __init__(self, mesh, cell, k):
        if k < 0:
            raise UnsupportedDegree(f"polynomial degree {k} out of range")
        self.dim = mesh.dim
        self.k = k
        verts = [int(v) for v in mesh.cells[cell]]
        g2l = {g: i for i, g in enumerate(verts)}
        coords = mesh.vertices[verts]
        self.anchor = coords.min(axis=0)
        self.coords = coords - self.anchor  # local-index coordinates
        self.center = self.coords.mean(axis=0)
        self.scale = mesh.cell_diameter(cell)
        self.measure = mesh.cell_measure(cell)

        sub = subdivide_cell(mesh, cell)
        self.n = sub.n
        self.simplices = [tuple(g2l[v] for v in s) for s in sub.simplices]
        self.internal_faces = [
            (tuple(g2l[v] for v in f.vertices), f.left, f.right, f.normal)
            for f in sub.internal_faces
        ]
        # boundary pieces in canonical (sorted-by-global-index) vertex order
        self.bpieces = []
        for piece, simplex in boundary_pieces(mesh, sub):
            canon = tuple(sorted(piece))
            self.bpieces.append((tuple(g2l[v] for v in canon), simplex))
        self.frame = choose_frame(sub, mesh.vertices)

        self.rt = RTSimplexBasis(self.dim, k, self.center, self.scale)
        self.rtdim = self.rt.size
        self.N = self.n * self.rtdim
        self.npk = pk_dim(self.dim, k)
        self.npk1 = pk_dim(self.dim, k - 1) if k >= 1 else 0
        self.nface = pk_dim(self.dim - 1, k)

        self._build_quadrature()
        self._build_dof_matrix()
        self._factorize()
        self._build_matrices()

    # .. geometry / quadrature ..........................................

    def _simplex_coords(self, s):
        return self.coords[list(self.simplices[s])]

    def _build_quadrature(self):
        deg = quadrature_degree(self.k)
        vol_rule = simplex_rule(self.dim, deg)
        self.face_rule = simplex_rule(self.dim - 1, deg)
        self.vol_pts = []  # per simplex, relative to anchor
        self.vol_wts = []
        self.simplex_measures = []
        for s in range(self.n):
            pts, wts = map_to_simplex(vol_rule, self._simplex_coords(s))
            self.vol_pts.append(pts)
            self.vol_wts.append(wts)
            self.simplex_measures.append(float(wts.sum()))
        # precomputed RT values/divs at the volume points of each simplex
        self.rt_vals = [self.rt.eval(p) for p in self.vol_pts]
        self.div_c = self.rt.div_coeffs()
        self.pk_exp = pk_exponents(self.dim, self.k)
        self.vol_pk = [
            eval_monomials((p - self.center) / self.scale, self.pk_exp)
            for p in self.vol_pts
        ]
        self.rt_divs = [pkv @ self.div_c.T for pkv in self.vol_pk]

    def _face_data(self, piece_local):
        """Quadrature points/weights and P_k(F) values for a face piece."""
        coords = self.coords[list(piece_local)]
        pts, wts = map_to_simplex(self.face_rule, coords)
        frame = FaceFrame(coords)
        fvals = eval_monomials(frame.local(pts), pk_exponents(self.dim - 1, self.k))
        return pts, wts, fvals, float(wts.sum())

    # .. DOF matrix ......................................................

    def _build_dof_matrix(self):
        N = self.N
        rows = []
        self.descriptors = []
        self.bpiece_data = []  # (pts, wts, fvals, normal, sign, measure, simplex)

        # (1) boundary face-piece moments of v.n against P_k(F)
        for p, (piece, s) in enumerate(self.bpieces):
            pts, wts, fvals, area = self._face_data(piece)
            normal = _outward_normal(self._simplex_coords(s), self.coords[list(piece)])
            sign = 1.0 if _lex_positive(normal) else -1.0
            self.bpiece_data.append((pts, wts, fvals, normal, sign, area, s))
            vn = self.rt.eval(pts) @ normal  # (nq, rtdim)
            for m in range(self.nface):
                row = np.zeros(N)
                row[s * self.rtdim : (s + 1) * self.rtdim] = (
                    (wts * fvals[:, m]) @ vn
                ) / area
                rows.append(row)
                self.descriptors.append(("bpiece", p, m))

        # (2) moments of v.n1 against P_{k-1}(T)
        if self.k >= 1:
            pk1 = pk_exponents(self.dim, self.k - 1)
            self.vol_pk1 = [
                eval_monomials((p - self.center) / self.scale, pk1)
                for p in self.vol_pts
            ]
            n1 = self.frame[0]
            for m in range(self.npk1):
                row = np.zeros(N)
                for s in range(self.n):
                    vn = self.rt_vals[s] @ n1
                    row[s * self.rtdim : (s + 1) * self.rtdim] = (
                        self.vol_wts[s] * self.vol_pk1[s][:, m]
                    ) @ vn
                rows.append(row / self.measure)
                self.descriptors.append(("n1", m))
            # (3),(4) moments of v.n2 (and v.n3) against P_{k-1}(T_i)
            self.simplex_pk1 = []
            for s in range(self.n):
                sc = self._simplex_coords(s)
                d = sc[:, None, :] - sc[None, :, :]
                sdiam = float(np.sqrt((d * d).sum(axis=2)).max())
                self.simplex_pk1.append(
                    eval_monomials((self.vol_pts[s] - sc.mean(axis=0)) / sdiam, pk1)
                )
            for a in range(1, self.dim):
                na = self.frame[a]
                for s in range(self.n):
                    vn = self.rt_vals[s] @ na
                    for m in range(self.npk1):
                        row = np.zeros(N)
                        row[s * self.rtdim : (s + 1) * self.rtdim] = (
                            (self.vol_wts[s] * self.simplex_pk1[s][:, m]) @ vn
                        ) / self.simplex_measures[s]
                        rows.append(row)
                        self.descriptors.append((f"n{a + 1}", s, m))

        self.ndof = len(rows)

        # (5) normal-jump moments on internal faces
        for piece, left, right, normal in self.internal_faces:
            canon = tuple(sorted(piece))
            pts, wts, fvals, area = self._face_data(canon)
            vn_l = self.rt.eval(pts) @ normal
            for m in range(self.nface):
                row = np.zeros(N)
                mom = ((wts * fvals[:, m]) @ vn_l) / area
                row[left * self.rtdim : (left + 1) * self.rtdim] = mom
                row[right * self.rtdim : (right + 1) * self.rtdim] -= mom
                rows.append(row)

        # (6) divergence matching: div(v|T_i) == div(v|T_1) as polynomials,
        # tested against P_k on T_1 (shared scaled basis makes this exact)
        gram1 = (self.vol_pk[0] * self.vol_wts[0][:, None]).T @ self.vol_pk[0]
        for s in range(1, self.n):
            block = gram1 @ self.div_c.T * (self.scale / self.simplex_measures[0])
            for m in range(self.npk):
                row = np.zeros(N)
                row[s * self.rtdim : (s + 1) * self.rtdim] = block[m]
                row[0 : self.rtdim] = -block[m]
                rows.append(row)

        self.A = np.array(rows)
        if self.A.shape != (N, N):
            raise SingularDofMatrix(
                f"DOF matrix is {self.A.shape}, expected ({N}, {N})"
            )

    def _factorize(self):
        # column equilibration before LU: high-degree monomial columns are
        # much smaller than low-degree ones on small subcells, which
        # otherwise dominates the condition number
        row_scale = np.abs(self.A).max(axis=1)
        row_scale[row_scale == 0.0] = 1.0
        Ar = self.A / row_scale[:, None]
        col_scale = np.abs(Ar).max(axis=0)
        col_scale[col_scale == 0.0] = 1.0
        Aeq = Ar / col_scale
        lu, piv = scipy.linalg.lu_factor(Aeq)
        anorm = np.linalg.norm(Aeq, 1)
        rcond = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0]
        if not np.isfinite(rcond) or rcond < 1.0 / COND_LIMIT:
            raise SingularDofMatrix(
                f"DOF matrix condition estimate {1.0 / max(rcond, 1e-300):.3e} "
                f"exceeds {COND_LIMIT:.1e}"
            )
        self.rcond = rcond
        rhs = np.zeros((self.N, self.ndof))
        rhs[np.arange(self.ndof), np.arange(self.ndof)] = 1.0
        rhs /= row_scale[:, None]
        # dual basis: coefficient vectors with unit functional value and
        # zero constraint rows.  Iterative refinement with the residual
        # accumulated in extended precision recovers full double-precision
        # accuracy even for the worst-conditioned (hexagon, k=3) classes.
        A_ld = Aeq.astype(np.longdouble)
        rhs_ld = rhs.astype(np.longdouble)
        x = scipy.linalg.lu_solve((lu, piv), rhs)
        for _ in range(3):
            r = np.asarray(rhs_ld - A_ld @ x.astype(np.longdouble), dtype=float)
            x += scipy.linalg.lu_solve((lu, piv), r)
        self.basis_coeffs = x / col_scale[:, None]

    # .. local matrices ..................................................

    def _build_matrices(self):
        nd = self.ndof
        self.Vmass = np.zeros((nd, nd))
        self.Vdiv = np.zeros((nd, nd))
        self.B = np.zeros((self.npk, nd))
        self.Pmass = np.zeros((self.npk, self.npk))
        # basis values per simplex at volume quadrature points
        self.basis_vals = []
        self.basis_divs = []
        for s in range(self.n):
            blk = self.basis_coeffs[s * self.rtdim : (s + 1) * self.rtdim]
            vals = np.einsum("qrd,rn->qnd", self.rt_vals[s], blk)
            divs = self.rt_divs[s] @ blk
            self.basis_vals.append(vals)
            self.basis_divs.append(divs)
            w = self.vol_wts[s]
            self.Vmass += np.einsum("qnd,qmd,q->nm", vals, vals, w)
            self.Vdiv += (divs * w[:, None]).T @ divs
            self.B += (self.vol_pk[s] * w[:, None]).T @ divs
            self.Pmass += (self.vol_pk[s] * w[:, None]).T @ self.vol_pk[s]
        # normal traces of the basis on boundary pieces
        self.bpiece_basis = []
        for pts, wts, fvals, normal, sign, area, s in self.bpiece_data:
            blk = self.basis_coeffs[s * self.rtdim : (s + 1) * self.rtdim]
            vn = (self.rt.eval(pts) @ normal) @ blk  # (nq, ndof)
            self.bpiece_basis.append(vn)

    # .. functionals ......................................................

    def dof_values(self, fun, offset):
        """Values of the functional rows (1)-(4) on a vector field.

        `fun` maps physical points (nq, d) to values (nq, d); `offset` is the
        instance anchor (cell min-corner) so cached relative points can be
        shifted to the right location.
        """
        vals = np.zeros(self.ndof)
        fvol = [fun(p + offset) for p in self.vol_pts]
        cache_face = {}
        for r, desc in enumerate(self.descriptors):
            if desc[0] == "bpiece":
                p, m = desc[1], desc[2]
                pts, wts, fvals, normal, sign, area, s = self.bpiece_data[p]
                if p not in cache_face:
                    cache_face[p] = fun(pts + offset) @ normal
                vals[r] = ((wts * fvals[:, m]) @ cache_face[p]) / area
            elif desc[0] == "n1":
                m = desc[1]
                acc = 0.0
                for s in range(self.n):
                    vn = fvol[s] @ self.frame[0]
                    acc += (self.vol_wts[s] * self.vol_pk1[s][:, m]) @ vn
                vals[r] = acc / self.measure
            else:
                a = int(desc[0][1]) - 1
                s, m = desc[1], desc[2]
                vn = fvol[s] @ self.frame[a]
                vals[r] = (
                    (self.vol_wts[s] * self.simplex_pk1[s][:, m]) @ vn
                ) / self.simplex_measures[s]
        return vals

    def pk_at(self, rel_pts):
        """P_k(T) basis values at points given relative to the anchor."""
        return eval_monomials((rel_pts - self.center) / self.scale, self.pk_exp)

    def dof_values_of_coeffs(self, loc):
        """Functional rows applied to a discrete field with local basis
        coefficients `loc`, recomputed through the quadrature machinery
        (equals `loc` up to roundoff: idempotence of Pi_h)."""
        vals = np.zeros(self.ndof)
        fvol = [np.einsum("qnd,n->qd", self.basis_vals[s], loc) for s in range(self.n)]
        for r, desc in enumerate(self.descriptors):
            if desc[0] == "bpiece":
                p, m = desc[1], desc[2]
                pts, wts, fvals, normal, sign, area, s = self.bpiece_data[p]
                vn = self.bpiece_basis[p] @ loc
                vals[r] = ((wts * fvals[:, m]) @ vn) / area
            elif desc[0] == "n1":
                m = desc[1]
                acc = 0.0
                for s in range(self.n):
                    acc += (self.vol_wts[s] * self.vol_pk1[s][:, m]) @ (
                        fvol[s] @ self.frame[0]
                    )
                vals[r] = acc / self.measure
            else:
                a = int(desc[0][1]) - 1
                s, m = desc[1], desc[2]
                vals[r] = (
                    (self.vol_wts[s] * self.simplex_pk1[s][:, m])
                    @ (fvol[s] @ self.frame[a])
                ) / self.simplex_measures[s]
        return vals

    def project_scalar(self, fun, offset):
        """Coefficients of the L2 projection onto P_k(T)."""
        rhs = np.zeros(self.npk)
        for s in range(self.n):
            fv = fun(self.vol_pts[s] + offset)
            rhs += (self.vol_pk[s] * self.vol_wts[s][:, None]).T @ fv
        return np.linalg.solve(self.Pmass, rhs)


def class_key(mesh, cell, k):
    verts = [int(v) for v in mesh.cells[cell]]
    coords = mesh.vertices[verts]
    rel = coords - coords.min(axis=0)
    ranks = tuple(int(r) for r in np.argsort(np.argsort(verts)))
    key = (k, mesh.dim, rel.tobytes(), ranks)
    if mesh.dim == 3:
        g2l = {g: i for i, g in enumerate(verts)}
        faces = tuple(
            sorted(tuple(g2l[v] for v in loop) for loop in mesh.cell_faces[cell])
        )
        key += (faces,)
    return key


class ClassCache:
    """Congruence-class cache of CellClass objects for one mesh."""

    def __init__(self, mesh, k):
        self.mesh = mesh
        self.k = k
        self._classes = {}
        self.cell_class = []
        self.cell_anchor = []
        for c in range(mesh.num_cells):
            key = class_key(mesh, c, k)
            if key not in self._classes:
                self._classes[key] = CellClass(mesh, c, k)
            self.cell_class.append(self._classes[key])
            self.cell_anchor.append(mesh.vertices[mesh.cells[c]].min(axis=0))

    @property
    def num_classes(self):
        return len(self._classes)
