"""Exception types shared across the package."""


class PolymixedError(Exception):
    """Base class for all package-specific errors."""


class ParseError(PolymixedError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TopologyError(PolymixedError):
    """A face has neither two incident cells nor a boundary tag."""


class NonConvexCell(PolymixedError):
    """Cell cannot be subdivided by a fan / supported split."""


class FaceMismatch(PolymixedError):
    """Induced triangulations of a shared face disagree between cells."""


class UnsupportedDegree(PolymixedError):
    """Quadrature degree outside the supported range."""


class DegenerateSimplex(PolymixedError):
    """Simplex with (near-)zero measure passed to quadrature."""


class FrameNotFound(PolymixedError):
    """No candidate direction is non-orthogonal to all internal normals."""


class DimensionMismatch(PolymixedError):
    """DOF row/column counts disagree; indicates broken subdivision."""


class SingularDofMatrix(PolymixedError):
    """Local DOF system is numerically singular."""


class SingularMassMatrix(PolymixedError):
    """Cell mass matrix is numerically singular (degenerate cell)."""


class SolveFailure(PolymixedError):
    """Global saddle-point solve failed or residual too large."""


class UnknownCase(PolymixedError):
    """Unrecognized manufactured-case name."""
