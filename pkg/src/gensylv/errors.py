"""Exception hierarchy shared by every module of the package."""


class GenSylvError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(GenSylvError, ValueError):
    """Matrix shapes are inconsistent with the operation."""


class SchurError(GenSylvError):
    """The real Schur factorization failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NearSingularOperatorError(GenSylvError):
    """A diagonal block system of the Sylvester kernel is (nearly) singular.

    ``block`` holds the (row block, column block) start indices of the
    offending small system.
    """

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class ZeroMatrixError(GenSylvError, ValueError):
    """A zero matrix was passed where a nonzero one is required."""


class SizeCapError(GenSylvError, ValueError):
    """The Kronecker oracle refuses problems above its size cap."""


class SingularSystemError(GenSylvError):
    """The assembled Kronecker system is singular."""
