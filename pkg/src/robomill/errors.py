"""Exception types shared across the package."""


class RobomillError(Exception):
    """Base class for all package errors."""


class NonConvergence(RobomillError):
    """An iterative solver hit its iteration limit.

    The last residual is kept on ``residual`` so callers can decide
    whether the result is still usable.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularJacobian(RobomillError):
    """``J K^-1 J^T`` (or the TCP Jacobian) is numerically singular."""


class SingularMatrix(RobomillError):
    """``K_theta - H`` or the Cartesian compliance cannot be inverted."""


class SingularMass(RobomillError):
    """The Cartesian mass matrix cannot be inverted."""


class SimulationDiverged(RobomillError):
    """Dynamic displacement exceeded the configured sanity bound."""


class ScenarioError(RobomillError):
    """Malformed scenario or robot description."""
