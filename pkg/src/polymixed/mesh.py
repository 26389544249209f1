"""Polytopal meshes: built-in grid families, subdivision, text I/O.

All built-in generators emit coordinates that are exact dyadic rationals, so
translated copies of a cell are bitwise-identical up to the offset.  Local
constructions elsewhere exploit this to cache per congruence class.

Conventions fixed here (and relied on everywhere else):
  * 2D cell = counterclockwise vertex loop; faces are its edges.
  * 3D cell = vertex list plus explicit outward-oriented face loops.
  * quad faces (3D) are split into two triangles by the diagonal through
    the face's lowest global vertex index; both incident cells agree.
  * fan triangulation apex = lowest global vertex index of the cell.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FaceMismatch, NonConvexCell, ParseError, TopologyError

GEOM_TOL = 1e-12


def polygon_area(coords):
    """Signed area of a 2D polygon loop."""
    x = coords[:, 0]
    y = coords[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _triangle_normal(coords):
    """Unit normal of a 3D triangle with a lexicographic sign rule."""
    n = np.cross(coords[1] - coords[0], coords[2] - coords[0])
    n = n / np.linalg.norm(n)
    for comp in n:
        if comp > 0:
            return n
        if comp < 0:
            return -n
    return n


def _edge_normal(coords):
    """Unit normal of a 2D segment with a lexicographic sign rule."""
    t = coords[1] - coords[0]
    n = np.array([t[1], -t[0]])
    n = n / np.linalg.norm(n)
    if n[0] < 0 or (n[0] == 0 and n[1] < 0):
        n = -n
    return n


class PolytopalMesh:
    """Partition of the unit square/cube into polygonal/polyhedral cells."""

    def __init__(self, dim, vertices, cells, cell_faces=None, level=1):
        self.dim = int(dim)
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = [np.asarray(c, dtype=np.int64) for c in cells]
        self.level = int(level)
        if self.dim == 2:
            cell_faces = [
                [(int(c[i]), int(c[(i + 1) % len(c)])) for i in range(len(c))]
                for c in self.cells
            ]
        elif cell_faces is None:
            raise ValueError("3D meshes need explicit cell faces")
        self.cell_faces = cell_faces
        self._build_faces()
        self._validate()
        self._piece_index = None

    # -- face table -----------------------------------------------------

    def _build_faces(self):
        self.face_vertices = []  # loop as seen from the first incident cell
        self.face_cells = []
        self._face_id = {}
        for c, faces in enumerate(self.cell_faces):
            for loop in faces:
                key = frozenset(loop)
                fid = self._face_id.get(key)
                if fid is None:
                    self._face_id[key] = len(self.face_vertices)
                    self.face_vertices.append(tuple(int(v) for v in loop))
                    self.face_cells.append([c, -1])
                else:
                    if self.face_cells[fid][1] != -1:
                        raise TopologyError(
                            f"face {self.face_vertices[fid]} incident to >2 cells"
                        )
                    self.face_cells[fid][1] = c
        self.face_cells = [tuple(fc) for fc in self.face_cells]

    def _validate(self):
        for c in range(len(self.cells)):
            if self.cell_measure(c) <= GEOM_TOL:
                raise TopologyError(f"cell {c} has non-positive measure")
        if self.dim == 3:
            for fid, loop in enumerate(self.face_vertices):
                coords = self.vertices[list(loop)]
                if len(loop) > 3:
                    n = _triangle_normal(coords[:3])
                    d = (coords - coords[0]) @ n
                    if np.abs(d).max() > 1e-12 * max(1.0, np.abs(coords).max()):
                        raise TopologyError(f"face {loop} is not planar")

    # -- geometry -------------------------------------------------------

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def num_vertices(self):
        return len(self.vertices)

    def cell_coords(self, c):
        return self.vertices[self.cells[c]]

    def cell_center(self, c):
        """Vertex mean; translation-equivariant reference point."""
        return self.cell_coords(c).mean(axis=0)

    def cell_diameter(self, c):
        pts = self.cell_coords(c)
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d * d).sum(axis=2)).max())

    def cell_measure(self, c):
        if self.dim == 2:
            return polygon_area(self.cell_coords(c))
        vol = 0.0
        for loop in self.cell_faces[c]:
            pts = self.vertices[list(loop)]
            for i in range(1, len(loop) - 1):
                vol += np.dot(pts[0], np.cross(pts[i], pts[i + 1]))
        return vol / 6.0

    def max_diameter(self):
        return max(self.cell_diameter(c) for c in range(self.num_cells))

    def face_id(self, verts):
        return self._face_id[frozenset(verts)]

    def is_boundary_face(self, fid):
        return self.face_cells[fid][1] == -1

    def face_measure(self, fid):
        coords = self.vertices[list(self.face_vertices[fid])]
        if self.dim == 2:
            return float(np.linalg.norm(coords[1] - coords[0]))
        area = 0.0
        for i in range(1, len(coords) - 1):
            area += 0.5 * np.linalg.norm(
                np.cross(coords[i] - coords[0], coords[i + 1] - coords[0])
            )
        return float(area)

    def face_pieces(self, fid):
        """Sub-simplices of a face: the edge itself (2D), or the fan of
        triangles from the face's lowest global vertex index (3D)."""
        loop = self.face_vertices[fid]
        if self.dim == 2:
            return [loop]
        if len(loop) == 3:
            return [loop]
        m = int(np.argmin(loop))
        rot = loop[m:] + loop[:m]
        return [
            (rot[0], rot[i], rot[i + 1]) for i in range(1, len(rot) - 1)
        ]

    def piece_index(self):
        """Map frozenset(piece vertices) -> (face id, piece number)."""
        if self._piece_index is None:
            idx = {}
            for fid in range(len(self.face_vertices)):
                for p, piece in enumerate(self.face_pieces(fid)):
                    idx[frozenset(piece)] = (fid, p)
            self._piece_index = idx
        return self._piece_index

    def boundary_face_ids(self):
        return [f for f in range(len(self.face_vertices)) if self.is_boundary_face(f)]

    def permuted(self, order):
        """Same mesh with cells renumbered (for invariance tests)."""
        cells = [self.cells[c] for c in order]
        if self.dim == 2:
            return PolytopalMesh(2, self.vertices, cells, level=self.level)
        faces = [self.cell_faces[c] for c in order]
        return PolytopalMesh(3, self.vertices, cells, faces, level=self.level)


@dataclass
class InternalFace:
    """Face separating two simplices inside one cell, with a fixed normal."""

    vertices: tuple
    left: int
    right: int
    normal: np.ndarray = field(repr=False)


@dataclass
class CellSubdivision:
    """Chain-ordered simplex subdivision of a single cell."""

    cell: int
    simplices: list  # global vertex tuples, positively oriented
    internal_faces: list  # InternalFace
    chain_order: tuple

    @property
    def n(self):
        return len(self.simplices)


def _orient_simplex(verts, coords):
    """Reorder so the simplex has positive volume/area."""
    mat = (coords[1:] - coords[0]).T
    if np.linalg.det(mat) < 0:
        verts = list(verts)
        verts[-1], verts[-2] = verts[-2], verts[-1]
    return tuple(verts)


def subdivide_cell(mesh, cell):
    """Split a cell into simplices without interior vertices.

    2D: fan triangulation from the lowest-index vertex.  3D: tetrahedra
    (identity) and triangular prisms (three tets, quad faces cut by the
    global lowest-index diagonal rule).
    """
    verts = mesh.cells[cell]
    if mesh.dim == 2:
        return _subdivide_polygon(mesh, cell, verts)
    if len(verts) == 4:
        tet = _orient_simplex([int(v) for v in verts], mesh.vertices[verts])
        return CellSubdivision(cell, [tet], [], (0,))
    if len(verts) == 6:
        return _subdivide_prism(mesh, cell)
    raise NonConvexCell(f"unsupported 3D cell with {len(verts)} vertices")


def _subdivide_polygon(mesh, cell, loop):
    loop = [int(v) for v in loop]
    m = int(np.argmin(loop))
    rot = loop[m:] + loop[:m]
    tris = []
    for i in range(1, len(rot) - 1):
        tri = (rot[0], rot[i], rot[i + 1])
        if polygon_area(mesh.vertices[list(tri)]) <= GEOM_TOL:
            raise NonConvexCell(
                f"fan triangulation of cell {cell} hit a degenerate triangle"
            )
        tris.append(tri)
    internal = []
    for i in range(1, len(tris)):
        edge = (rot[0], rot[i + 1])
        normal = _edge_normal(mesh.vertices[list(edge)])
        internal.append(InternalFace(edge, i - 1, i, normal))
    return CellSubdivision(cell, tris, internal, tuple(range(len(tris))))


def _subdivide_prism(mesh, cell):
    faces = mesh.cell_faces[cell]
    tris = [f for f in faces if len(f) == 3]
    quads = [f for f in faces if len(f) == 4]
    if len(tris) != 2 or len(quads) != 3:
        raise NonConvexCell(f"cell {cell} is not a triangular prism")
    quad_edges = set()
    for q in quads:
        for i in range(4):
            quad_edges.add(frozenset((q[i], q[(i + 1) % 4])))
    a = list(tris[0])
    top = set(tris[1])
    b = []
    for ai in a:
        partners = [t for t in top if frozenset((ai, t)) in quad_edges]
        if len(partners) != 1:
            raise NonConvexCell(f"cell {cell}: prism side edges are ambiguous")
        b.append(partners[0])
    vmin = min(a + b)
    if vmin in b:
        a, b = b, a
    r = a.index(vmin)
    a = a[r:] + a[:r]
    b = b[r:] + b[:r]
    a0, a1, a2 = a
    b0, b1, b2 = b
    # side face (a1,a2,b2,b1): diagonal through its lowest vertex
    if min(a1, a2, b1, b2) in (a1, b2):
        raw = [(a0, a1, a2, b2), (a0, a1, b2, b1), (a0, b1, b2, b0)]
        internal = [(a0, a1, b2), (a0, b1, b2)]
    else:
        raw = [(a0, a1, a2, b1), (a0, a2, b2, b1), (a0, b0, b1, b2)]
        internal = [(a0, a2, b1), (a0, b1, b2)]
    tets = [_orient_simplex(t, mesh.vertices[list(t)]) for t in raw]
    ifaces = [
        InternalFace(f, i, i + 1, _triangle_normal(mesh.vertices[list(f)]))
        for i, f in enumerate(internal)
    ]
    return CellSubdivision(cell, tets, ifaces, (0, 1, 2))


def simplex_facets(simplex):
    """Facets of a simplex as vertex tuples."""
    s = list(simplex)
    return [tuple(s[:i] + s[i + 1 :]) for i in range(len(s))]


def boundary_pieces(mesh, subdivision):
    """Simplex facets on the cell boundary: (piece vertices, simplex index).

    Raises FaceMismatch if a boundary facet is not a face piece of the mesh
    (i.e. the subdivision disagrees with the neighbor's induced split).
    """
    internal = {frozenset(f.vertices) for f in subdivision.internal_faces}
    pieces = mesh.piece_index()
    out = []
    for i, simplex in enumerate(subdivision.simplices):
        for facet in simplex_facets(simplex):
            key = frozenset(facet)
            if key in internal:
                continue
            if key not in pieces:
                raise FaceMismatch(
                    f"cell {subdivision.cell}: boundary facet {facet} does not "
                    "match any face piece"
                )
            out.append((facet, i))
    return out


def check_chain_order(mesh, subdivision):
    """Each simplex (after the first) meets the union of its predecessors in
    exactly one internal face.  Returns True or raises FaceMismatch."""
    n = subdivision.n
    internal = [frozenset(f.vertices) for f in subdivision.internal_faces]
    if len(internal) != n - 1:
        raise FaceMismatch(
            f"cell {subdivision.cell}: {len(internal)} internal faces for "
            f"{n} simplices"
        )
    order = subdivision.chain_order
    for m in range(1, n):
        sm = subdivision.simplices[order[m]]
        facets = {frozenset(f) for f in simplex_facets(sm)}
        prev = set()
        for i in range(m):
            prev.update(
                frozenset(f) for f in simplex_facets(subdivision.simplices[order[i]])
            )
        shared = facets & prev
        if len(shared) != 1 or not shared <= set(internal):
            raise FaceMismatch(
                f"cell {subdivision.cell}: chain order invalid at position {m}"
            )
    return True


# -- built-in grid families ---------------------------------------------


def _canonical_mesh(dim, vert_map, cells, cell_faces=None, level=1):
    """Renumber vertices lexicographically by coordinates."""
    items = sorted(vert_map.items(), key=lambda kv: kv[0])
    remap = {old: new for new, (_, old) in enumerate(items)}
    coords = np.array([k for k, _ in items], dtype=float)
    new_cells = [[remap[v] for v in c] for c in cells]
    new_faces = None
    if cell_faces is not None:
        new_faces = [
            [tuple(remap[v] for v in loop) for loop in faces] for faces in cell_faces
        ]
    return PolytopalMesh(dim, coords, new_cells, new_faces, level=level)


class _VertexPool:
    def __init__(self):
        self.map = {}

    def add(self, *coords):
        key = tuple(float(c) for c in coords)
        if key not in self.map:
            self.map[key] = len(self.map)
        return self.map[key]


def make_quad_grid(level):
    """Congruent non-parallelogram trapezoid tiling of the unit square.

    Level 1 is the unrefined unit square; from level 2 on, every cell is a
    trapezoid with vertical parallel sides, congruent up to reflection, and
    the max diameter halves exactly per level.
    """
    if not 1 <= level <= 12:
        raise ValueError("quad grid level must be in [1, 12]")
    if level == 1:
        return PolytopalMesh(
            2, [(0, 0), (1, 0), (1, 1), (0, 1)], [[0, 1, 2, 3]], level=1
        )
    n = 2 ** (level - 1)
    # cut heights alternate between 5/4 and 3/4 of the half row height
    cut = [1.25 if i % 2 == 0 else 0.75 for i in range(n + 1)]
    pool = _VertexPool()
    cells = []
    for j in range(n // 2):
        y0 = 2 * j / n
        y1 = 2 * (j + 1) / n
        for i in range(n):
            x0, x1 = i / n, (i + 1) / n
            c0 = y0 + cut[i] / n
            c1 = y0 + cut[i + 1] / n
            lo = [pool.add(x0, y0), pool.add(x1, y0), pool.add(x1, c1), pool.add(x0, c0)]
            hi = [pool.add(x0, c0), pool.add(x1, c1), pool.add(x1, y1), pool.add(x0, y1)]
            cells.extend([lo, hi])
    return _canonical_mesh(2, pool.map, cells, level=level)


# 11-cell quad/hexagon pattern on [0,4]^2 (dyadic coordinates, all cells
# strictly convex): one hexagon, ten quadrilaterals.
_QUADHEX_PATTERN = [
    [(1, 1), (3, 1), (3.5, 2), (3, 3), (1, 3), (0.5, 2)],
    [(1, 0), (3, 0), (3, 1), (1, 1)],
    [(1, 3), (3, 3), (3, 4), (1, 4)],
    [(0, 0), (0.5, 0), (0.5, 2), (0, 2)],
    [(0.5, 0), (1, 0), (1, 1), (0.5, 2)],
    [(3, 0), (4, 0), (4, 1), (3, 1)],
    [(3, 1), (4, 1), (4, 2), (3.5, 2)],
    [(0, 2), (0.5, 2), (1, 3), (0, 3)],
    [(0, 3), (1, 3), (1, 4), (0, 4)],
    [(3.5, 2), (3.5, 4), (3, 4), (3, 3)],
    [(3.5, 2), (4, 2), (4, 4), (3.5, 4)],
]


def make_quadhex_grid(level):
    """Mixed convex quadrilateral/hexagon tiling of the unit square.

    An 11-cell pattern is stamped onto a 2^(level-1) x 2^(level-1) grid of
    blocks; odd blocks are mirrored so pattern boundaries match edge to edge.
    """
    if not 1 <= level <= 12:
        raise ValueError("quadhex grid level must be in [1, 12]")
    m = 2 ** (level - 1)
    s = 1.0 / m
    pool = _VertexPool()
    cells = []
    for bj in range(m):
        for bi in range(m):
            for cell in _QUADHEX_PATTERN:
                coords = []
                for px, py in cell:
                    qx = 4.0 - px if bi % 2 else px
                    qy = 4.0 - py if bj % 2 else py
                    coords.append((bi * s + qx * (s / 4), bj * s + qy * (s / 4)))
                # a single mirror flips orientation; restore CCW
                if polygon_area(np.array(coords)) < 0:
                    coords.reverse()
                cells.append([pool.add(*p) for p in coords])
    return _canonical_mesh(2, pool.map, cells, level=level)


def make_wedge_grid(level):
    """Uniform wedge (triangular prism) grid on the unit cube.

    2^(3(level-1)) boxes, each cut by the same vertical diagonal plane into
    two wedges: 2 triangle faces and 3 rectangle faces each.
    """
    if not 1 <= level <= 8:
        raise ValueError("wedge grid level must be in [1, 8]")
    n = 2 ** (level - 1)
    pool = _VertexPool()

    def v(i, j, k):
        return pool.add(i / n, j / n, k / n)

    cells = []
    cell_faces = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                corners = {
                    (di, dj, dk): v(i + di, j + dj, k + dk)
                    for di in (0, 1)
                    for dj in (0, 1)
                    for dk in (0, 1)
                }
                # diagonal of the horizontal section: (i,j) -- (i+1,j+1)
                bottoms = [
                    ((0, 0), (1, 0), (1, 1)),
                    ((0, 0), (1, 1), (0, 1)),
                ]
                for tri in bottoms:
                    lo = [corners[(di, dj, 0)] for di, dj in tri]
                    hi = [corners[(di, dj, 1)] for di, dj in tri]
                    faces = [tuple(lo[::-1]), tuple(hi)]
                    for e in range(3):
                        e1 = (e + 1) % 3
                        faces.append((lo[e], lo[e1], hi[e1], hi[e]))
                    cells.append(lo + hi)
                    cell_faces.append(faces)
    return _canonical_mesh(3, pool.map, cells, cell_faces, level=level)


def make_grid(family, level):
    if family == "quad":
        return make_quad_grid(level)
    if family == "quadhex":
        return make_quadhex_grid(level)
    if family == "wedge":
        return make_wedge_grid(level)
    raise ValueError(f"unknown grid family {family!r}")


# -- text format ----------------------------------------------------------


def mesh_write(mesh, path):
    """Write the line-oriented text format (see README)."""
    lines = [f"polymesh {mesh.dim} {mesh.num_vertices} {mesh.num_cells}"]
    for p in mesh.vertices:
        lines.append(" ".join(f"{x:.17g}" for x in p))
    for c in mesh.cells:
        lines.append("cell " + str(len(c)) + " " + " ".join(str(v) for v in c))
    for fid in mesh.boundary_face_ids():
        lines.append("bface " + " ".join(str(v) for v in mesh.face_vertices[fid]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def mesh_read(path):
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ParseError("empty file", line=1)
    head = raw[0].split()
    if len(head) != 4 or head[0] != "polymesh":
        raise ParseError("bad header", line=1)
    try:
        dim, nv, nc = (int(t) for t in head[1:])
    except ValueError as exc:
        raise ParseError(str(exc), line=1) from None
    if dim not in (2, 3):
        raise ParseError(f"unsupported dimension {dim}", line=1)
    verts = []
    for ln in range(1, 1 + nv):
        try:
            row = [float(t) for t in raw[ln].split()]
        except (ValueError, IndexError):
            raise ParseError("bad vertex line", line=ln + 1) from None
        if len(row) != dim:
            raise ParseError(f"expected {dim} coordinates", line=ln + 1)
        verts.append(row)
    verts = np.array(verts)
    cells = []
    bfaces = []
    for ln in range(1 + nv, len(raw)):
        toks = raw[ln].split()
        if not toks:
            continue
        if toks[0] == "cell":
            try:
                m = int(toks[1])
                ids = [int(t) for t in toks[2:]]
            except (ValueError, IndexError):
                raise ParseError("bad cell line", line=ln + 1) from None
            if len(ids) != m or any(not 0 <= v < nv for v in ids):
                raise ParseError("bad cell vertex list", line=ln + 1)
            cells.append(ids)
        elif toks[0] == "bface":
            try:
                ids = [int(t) for t in toks[1:]]
            except ValueError:
                raise ParseError("bad bface line", line=ln + 1) from None
            bfaces.append((frozenset(ids), ln + 1))
        else:
            raise ParseError(f"unexpected record {toks[0]!r}", line=ln + 1)
    if len(cells) != nc:
        raise ParseError(f"expected {nc} cells, found {len(cells)}", line=len(raw))
    if dim == 2:
        loops = []
        for c in cells:
            loop = np.asarray(c)
            if polygon_area(verts[loop]) < 0:
                loop = loop[::-1]
            loops.append(loop)
        mesh = PolytopalMesh(2, verts, loops)
    else:
        cell_faces = [_convex_cell_faces(verts, c) for c in cells]
        mesh = PolytopalMesh(3, verts, cells, cell_faces)
    tagged = {key for key, _ in bfaces}
    for key, ln in bfaces:
        if key not in mesh._face_id:
            raise TopologyError(f"bface at line {ln} matches no cell face")
    for fid in range(len(mesh.face_vertices)):
        if mesh.is_boundary_face(fid):
            if frozenset(mesh.face_vertices[fid]) not in tagged:
                raise TopologyError(
                    f"face {mesh.face_vertices[fid]} has one incident cell "
                    "and no boundary tag"
                )
    return mesh


def _convex_cell_faces(verts, cell):
    """Outward face loops of a convex 3D cell via its convex hull."""
    from scipy.spatial import ConvexHull

    ids = np.asarray(cell)
    pts = verts[ids]
    hull = ConvexHull(pts)
    scale = max(1.0, np.abs(pts).max())
    groups = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        key = tuple(np.round(eq / np.linalg.norm(eq[:3]), 9))
        groups.setdefault(key, []).append(simplex)
    loops = []
    for key, simplices in groups.items():
        normal = np.array(key[:3])
        members = sorted({int(v) for s in simplices for v in s})
        center = pts[members].mean(axis=0)
        # order around the face by angle in an in-plane basis
        t1 = pts[members[0]] - center
        t1 = t1 / np.linalg.norm(t1)
        t2 = np.cross(normal, t1)
        ang = [
            np.arctan2(np.dot(pts[m] - center, t2), np.dot(pts[m] - center, t1))
            for m in members
        ]
        order = [m for _, m in sorted(zip(ang, members))]
        coords = pts[order]
        d = (coords - coords[0]) @ normal
        if np.abs(d).max() > 1e-12 * scale:
            raise TopologyError("non-planar hull face group")
        loops.append(tuple(int(ids[m]) for m in order))
    return loops
