"""Exception hierarchy for the package.

Every numerical failure mode gets its own class so callers (notably the CLI)
can map them to distinct exit codes.
"""


class LiouvilleError(Exception):
    """Base class for all package-specific errors."""


class DomainError(LiouvilleError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at a pole (z = -1 for second-kind functions, mu = -2)."""


class InvalidModeError(DomainError):
    """Degree/order combination that does not define a usable mode."""


class ResonanceError(LiouvilleError):
    """Right-hand side violates the range condition of a resonant mode solve."""

    def __init__(self, message, projection=None):
        super().__init__(message)
        self.projection = projection


class DegeneracyError(LiouvilleError):
    """A zero assumed simple looks multiple (|P'| below tolerance)."""


class AmbiguityError(LiouvilleError):
    """mu sits on an eigenvalue crossing; the requested count is ill-defined."""


class ResolutionError(LiouvilleError):
    """Grid too coarse: aliasing monitor or coefficient tail check failed."""


class PrecisionError(LiouvilleError):
    """Quadrature refinement disagreement above tolerance.

    Carries both estimates so the caller can diagnose.
    """

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class KernelDimensionError(LiouvilleError):
    """Restricted kernel is not one-dimensional; continuation refused.

    ``modes`` lists the offending kernel generators.
    """

    def __init__(self, message, modes=()):
        super().__init__(message)
        self.modes = tuple(modes)


class NewtonDivergenceError(LiouvilleError):
    """Newton corrector failed below the minimal step length.

    ``partial`` holds the branch points computed before the failure.
    """

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = list(partial)


class DegenerateFitError(LiouvilleError):
    """Curvature fit rejected (too few points, trivial branch, or bad residual)."""
