"""Global mixed system: DOF numbering, assembly, saddle-point solve.

Unknowns are the flux q_h in Lambda_k (shared DOFs = face-piece normal
moments, private DOFs = interior moments) and the cellwise pressure u_h in
P_k.  The discrete problem for  a q + grad u = 0,  div q = f,  u = -g on
the boundary (a = identity here) is the symmetric saddle-point system

    [ M  B^T ] [  q ]   [ G ]
    [ B   0  ] [ -u ] = [ F ]

with M the velocity mass matrix, B the divergence matrix, G the boundary
term <g, v.n>, F the source moments (f, w).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import SolveFailure, UnknownCase
from .localspace import ClassCache
from .monomials import pk_dim

DENSE_LIMIT = 2000


@dataclass
class ManufacturedCase:
    """Exact solution bundle: u, flux q = -grad u, source f = div q,
    boundary datum g = -u."""

    name: str
    dim: int
    u: callable
    q: callable
    f: callable

    def g(self, pts):
        return -self.u(pts)


def manufactured_case(name):
    """Built-in smooth exact solutions used in the convergence studies."""
    import sympy as sp

    if name == "trig2d":
        x, y = sp.symbols("x y")
        u = sp.sin(sp.pi * x) * sp.sin(sp.pi * y)
        syms = (x, y)
    elif name == "poly3d":
        x, y, z = sp.symbols("x y z")
        u = 2**8 * (x - x**2) ** 2 * (y - y**2) * (z - z**2)
        syms = (x, y, z)
    else:
        raise UnknownCase(f"unknown manufactured case {name!r}")
    q = [-sp.diff(u, s) for s in syms]
    f = sum(sp.diff(qi, s) for qi, s in zip(q, syms))
    u_fn = sp.lambdify(syms, u, "numpy")
    q_fns = [sp.lambdify(syms, qi, "numpy") for qi in q]
    f_fn = sp.lambdify(syms, sp.expand(f), "numpy")
    dim = len(syms)

    def ueval(pts):
        return np.asarray(u_fn(*(pts[:, i] for i in range(dim))), dtype=float)

    def qeval(pts):
        cols = [q_fn(*(pts[:, i] for i in range(dim))) for q_fn in q_fns]
        return np.stack(
            [np.broadcast_to(c, pts.shape[:1]).astype(float) for c in cols], axis=-1
        )

    def feval(pts):
        return np.asarray(
            np.broadcast_to(
                f_fn(*(pts[:, i] for i in range(dim))), pts.shape[:1]
            ),
            dtype=float,
        )

    return ManufacturedCase(name, dim, ueval, qeval, feval)


class DiscreteProblem:
    """Mesh + degree k: DOF maps, cached local constructions, assembly."""

    def __init__(self, mesh, k):
        self.mesh = mesh
        self.k = k
        self.cache = ClassCache(mesh, k)
        self.npk = pk_dim(mesh.dim, k)
        self._build_dof_map()

    def _build_dof_map(self):
        mesh = self.mesh
        nface = pk_dim(mesh.dim - 1, self.k)
        piece_base = {}
        next_dof = 0
        for fid in range(len(mesh.face_vertices)):
            for p, piece in enumerate(mesh.face_pieces(fid)):
                piece_base[frozenset(piece)] = next_dof
                next_dof += nface
        self.num_shared = next_dof
        self.cell_vdofs = []
        self.cell_signs = []
        for c in range(mesh.num_cells):
            cls = self.cache.cell_class[c]
            cverts = mesh.cells[c]
            g = np.empty(cls.ndof, dtype=np.int64)
            s = np.ones(cls.ndof)
            for r, desc in enumerate(cls.descriptors):
                if desc[0] == "bpiece":
                    p, m = desc[1], desc[2]
                    piece, _ = cls.bpieces[p]
                    key = frozenset(int(cverts[i]) for i in piece)
                    g[r] = piece_base[key] + m
                    s[r] = cls.bpiece_data[p][4]
                else:
                    g[r] = next_dof
                    next_dof += 1
            self.cell_vdofs.append(g)
            self.cell_signs.append(s)
        self.num_vdofs = next_dof
        self.num_pdofs = mesh.num_cells * self.npk

    def cell_pdofs(self, c):
        return slice(c * self.npk, (c + 1) * self.npk)

    def local_coeffs(self, coeffs, c):
        """Local basis coefficients of a global velocity vector on cell c."""
        return self.cell_signs[c] * coeffs[self.cell_vdofs[c]]

    # -- assembly ---------------------------------------------------------

    def assemble(self, case):
        mesh = self.mesh
        mi, mj, mv = [], [], []
        bi, bj, bv = [], [], []
        G = np.zeros(self.num_vdofs)
        F = np.zeros(self.num_pdofs)
        for c in range(mesh.num_cells):
            cls = self.cache.cell_class[c]
            g = self.cell_vdofs[c]
            s = self.cell_signs[c]
            offset = self.cache.cell_anchor[c]
            loc_m = (s[:, None] * cls.Vmass) * s[None, :]
            ii, jj = np.meshgrid(g, g, indexing="ij")
            mi.append(ii.ravel())
            mj.append(jj.ravel())
            mv.append(loc_m.ravel())
            pd = np.arange(c * self.npk, (c + 1) * self.npk)
            loc_b = cls.B * s[None, :]
            ii, jj = np.meshgrid(pd, g, indexing="ij")
            bi.append(ii.ravel())
            bj.append(jj.ravel())
            bv.append(loc_b.ravel())
            for sx in range(cls.n):
                fv = case.f(cls.vol_pts[sx] + offset)
                F[pd] += (cls.vol_pk[sx] * cls.vol_wts[sx][:, None]).T @ fv
            cverts = mesh.cells[c]
            for p, (piece, _) in enumerate(cls.bpieces):
                key = frozenset(int(cverts[i]) for i in piece)
                fid, _ = mesh.piece_index()[key]
                if not mesh.is_boundary_face(fid):
                    continue
                pts, wts, fvals, normal, sign, area, sx = cls.bpiece_data[p]
                gv = case.g(pts + offset)
                G[g] += s * ((wts * gv) @ cls.bpiece_basis[p])
        nv = self.num_vdofs
        M = scipy.sparse.coo_matrix(
            (np.concatenate(mv), (np.concatenate(mi), np.concatenate(mj))),
            shape=(nv, nv),
        ).tocsr()
        B = scipy.sparse.coo_matrix(
            (np.concatenate(bv), (np.concatenate(bi), np.concatenate(bj))),
            shape=(self.num_pdofs, nv),
        ).tocsr()
        return M, B, G, F

    def solve(self, case):
        """Returns (q coefficients, u coefficients)."""
        M, B, G, F = self.assemble(case)
        nv, npd = self.num_vdofs, self.num_pdofs
        n = nv + npd
        rhs = np.concatenate([G, F])
        K = scipy.sparse.bmat([[M, B.T], [B, None]], format="csc")
        if n < DENSE_LIMIT:
            try:
                sol = np.linalg.solve(K.toarray(), rhs)
            except np.linalg.LinAlgError as exc:
                raise SolveFailure(str(exc)) from None
        else:
            try:
                sol = scipy.sparse.linalg.splu(K).solve(rhs)
            except RuntimeError as exc:
                raise SolveFailure(str(exc)) from None
        res = np.linalg.norm(K @ sol - rhs)
        scale = max(np.linalg.norm(rhs), 1.0)
        if not np.isfinite(res) or res > 1e-8 * scale:
            raise SolveFailure(
                f"saddle-point residual {res:.3e} exceeds 1e-8 * |rhs|"
            )
        return sol[:nv], -sol[nv:]

    # -- norms and diagnostics ---------------------------------------------

    def norm_pressure(self, coeffs):
        """L2 norm of a cellwise-P_k field given by coefficients."""
        acc = 0.0
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            u = coeffs[self.cell_pdofs(c)]
            acc += float(u @ cls.Pmass @ u)
        return np.sqrt(acc)

    def norm_velocity(self, coeffs, vnorm=True):
        """L2 norm (vnorm=False) or full H(div) norm (vnorm=True) of a
        discrete velocity field."""
        acc = 0.0
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            v = self.local_coeffs(coeffs, c)
            acc += float(v @ cls.Vmass @ v)
            if vnorm:
                acc += float(v @ cls.Vdiv @ v)
        return np.sqrt(acc)

    def error_pressure(self, coeffs, ufun):
        """L2 error between a discrete pressure and a function."""
        acc = 0.0
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            u = coeffs[self.cell_pdofs(c)]
            offset = self.cache.cell_anchor[c]
            for s in range(cls.n):
                diff = cls.vol_pk[s] @ u - ufun(cls.vol_pts[s] + offset)
                acc += float(cls.vol_wts[s] @ diff**2)
        return np.sqrt(acc)

    def error_velocity(self, coeffs, qfun):
        """L2 error between a discrete velocity and a vector field."""
        acc = 0.0
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            v = self.local_coeffs(coeffs, c)
            offset = self.cache.cell_anchor[c]
            for s in range(cls.n):
                vals = np.einsum("qnd,n->qd", cls.basis_vals[s], v)
                diff = vals - qfun(cls.vol_pts[s] + offset)
                acc += float(cls.vol_wts[s] @ (diff**2).sum(axis=1))
        return np.sqrt(acc)

    def divergence_defect(self, qcoeffs, fcoeffs):
        """max cellwise P_k coefficient difference between div q_h and the
        projected source (should vanish: div q_h = Q_h f identically)."""
        worst = 0.0
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            v = self.local_coeffs(qcoeffs, c)
            div_c = np.linalg.solve(cls.Pmass, cls.B @ v)
            worst = max(
                worst, np.abs(div_c - fcoeffs[self.cell_pdofs(c)]).max()
            )
        return worst

    def inf_sup_constant(self, case=None):
        """Discrete inf-sup constant: sqrt of the smallest eigenvalue of
        B A^-1 B^T x = lambda M_p x with A the H(div) Gram matrix.  Dense;
        intended for small diagnostic meshes."""
        import scipy.linalg

        dummy = _zero_case(self.mesh.dim)
        M, B, _, _ = self.assemble(dummy)
        A = (M + self._div_gram()).toarray()
        Bd = B.toarray()
        S = Bd @ np.linalg.solve(A, Bd.T)
        Mp = self._pressure_gram().toarray()
        lam = scipy.linalg.eigvalsh(S, Mp)
        return float(np.sqrt(max(lam[0], 0.0)))

    def _div_gram(self):
        ii, jj, vv = [], [], []
        for c in range(self.mesh.num_cells):
            cls = self.cache.cell_class[c]
            g = self.cell_vdofs[c]
            s = self.cell_signs[c]
            loc = (s[:, None] * cls.Vdiv) * s[None, :]
            a, b = np.meshgrid(g, g, indexing="ij")
            ii.append(a.ravel())
            jj.append(b.ravel())
            vv.append(loc.ravel())
        return scipy.sparse.coo_matrix(
            (np.concatenate(vv), (np.concatenate(ii), np.concatenate(jj))),
            shape=(self.num_vdofs, self.num_vdofs),
        ).tocsr()

    def _pressure_gram(self):
        blocks = [self.cache.cell_class[c].Pmass for c in range(self.mesh.num_cells)]
        return scipy.sparse.block_diag(blocks, format="csr")


def _zero_case(dim):
    return ManufacturedCase(
        "zero",
        dim,
        lambda p: np.zeros(p.shape[0]),
        lambda p: np.zeros_like(p),
        lambda p: np.zeros(p.shape[0]),
    )
