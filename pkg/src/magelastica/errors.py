"""Exception and warning types shared across the package."""


class MagelasticaError(Exception):
    """Base class for solver and configuration failures."""


class NonConvergenceError(MagelasticaError):
    """A nonlinear solve stalled before meeting its residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonFiniteValueError(MagelasticaError):
    """An iterate or source evaluation produced NaN or infinity."""


class SingularOperatorError(MagelasticaError):
    """The discrete linear operator is numerically singular (resonance)."""


class HTooSmallError(MagelasticaError):
    """Field intensity does not dominate the target curvature."""


class BoundaryMismatchError(MagelasticaError):
    """A target violates the clamped / free-end boundary conditions."""


class NoNontrivialBranchError(MagelasticaError):
    """No buckled branch exists at the requested field intensity."""


class LineSearchError(MagelasticaError):
    """Backtracking line search failed to produce a decrease."""


class ConfigError(MagelasticaError):
    """Invalid run configuration (schema violation, bad file, bad value)."""


class CapExceededWarning(UserWarning):
    """An inner-loop iterate left the admissible control ball."""
