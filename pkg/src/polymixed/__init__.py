"""Arbitrary-order mixed finite elements on polytopal meshes.

Composite H(div) elements: each polygonal/polyhedral cell is split into a
chain-ordered simplex subdivision carrying piecewise Raviart-Thomas
functions whose divergence is a single cellwise polynomial.  The package
provides the local spaces, the projections Pi_h and Q_h, the global mixed
solver, and a convergence-study CLI.
"""

from .assembly import DiscreteProblem, ManufacturedCase, manufactured_case
from .errors import (
    DegenerateSimplex,
    DimensionMismatch,
    FaceMismatch,
    FrameNotFound,
    NonConvexCell,
    ParseError,
    PolymixedError,
    SingularDofMatrix,
    SingularMassMatrix,
    SolveFailure,
    TopologyError,
    UnknownCase,
    UnsupportedDegree,
)
from .localspace import CellClass, ClassCache, choose_frame
from .mesh import (
    CellSubdivision,
    PolytopalMesh,
    make_grid,
    make_quad_grid,
    make_quadhex_grid,
    make_wedge_grid,
    mesh_read,
    mesh_write,
    subdivide_cell,
)
from .postproc import ConvergenceRecord, emit_table, fit_rate, rates
from .projection import (
    commuting_defect,
    conformity_jump,
    idempotence_defect,
    project_scalar,
    project_velocity,
)
from .quadrature import QuadRule, integrate, map_to_simplex, simplex_rule

__version__ = "1.0.0"

__all__ = [
    "CellClass",
    "CellSubdivision",
    "ClassCache",
    "ConvergenceRecord",
    "DegenerateSimplex",
    "DimensionMismatch",
    "DiscreteProblem",
    "FaceMismatch",
    "FrameNotFound",
    "ManufacturedCase",
    "NonConvexCell",
    "ParseError",
    "PolymixedError",
    "PolytopalMesh",
    "QuadRule",
    "SingularDofMatrix",
    "SingularMassMatrix",
    "SolveFailure",
    "TopologyError",
    "UnknownCase",
    "UnsupportedDegree",
    "choose_frame",
    "commuting_defect",
    "conformity_jump",
    "emit_table",
    "fit_rate",
    "idempotence_defect",
    "integrate",
    "make_grid",
    "make_quad_grid",
    "make_quadhex_grid",
    "make_wedge_grid",
    "manufactured_case",
    "map_to_simplex",
    "mesh_read",
    "mesh_write",
    "project_scalar",
    "project_velocity",
    "rates",
    "simplex_rule",
    "subdivide_cell",
]
