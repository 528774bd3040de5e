"""Domain exceptions.

Every exception carries the exit code the command-line front end returns
when it escapes a command handler.
"""


class CarnotError(Exception):
    """Base class for all errors raised by the library."""

    exit_code = 1


class ConfigurationError(CarnotError, ValueError):
    """Invalid settings, environment variables or command-line parameters."""

    exit_code = 2


class ArtifactParseError(CarnotError, ValueError):
    """Malformed algebra/curve file (bad JSON or schema violation)."""

    exit_code = 3


class AlgebraValidationError(CarnotError, ValueError):
    """Structure constants violate antisymmetry, grading, Jacobi or generation."""

    exit_code = 4


class DimensionMismatchError(CarnotError, ValueError):
    """Operands live in different algebras or have the wrong shape."""

    exit_code = 5


class DomainError(CarnotError, ValueError):
    """Times, windows or intervals outside the admissible domain."""

    exit_code = 6


class DegenerateDirectionsError(CarnotError):
    """Projected increments lie in a hyperplane of the first layer."""

    exit_code = 7


class SingularIncrementsError(CarnotError):
    """Increment matrix is singular or too ill-conditioned to invert."""

    exit_code = 8


class InfeasibleParametersError(CarnotError, ValueError):
    """Shortening parameters violate the margin inequalities."""

    exit_code = 9


class IdentitySuiteFailure(CarnotError):
    """An algebraic identity check exceeded its tolerance."""

    exit_code = 10


class StageInvariantError(CarnotError):
    """A shortening stage left a residual in a layer it should have cleared."""

    exit_code = 11
