"""Exception hierarchy shared by all modules."""


class PendulumError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PendulumError, ValueError):
    """An argument lies outside the domain of a formula (e.g. |v| >= 1)."""


class ParameterError(PendulumError, ValueError):
    """Problem parameters are invalid or inadmissible for the requested operation."""


class IntegrationError(PendulumError, RuntimeError):
    """The ODE integrator exhausted its step budget.

    Attributes
    ----------
    t_reached : float
        Last time the integrator reached before giving up.
    """

    def __init__(self, message, t_reached):
        super().__init__(f"{message} (reached t={t_reached!r})")
        self.t_reached = t_reached


class BoundaryTwistError(PendulumError):
    """The boundary twist condition failed on the strip edges."""

    def __init__(self, message, q=None):
        super().__init__(message if q is None else f"{message} at q={q!r}")
        self.q = q


class TwistViolation(PendulumError):
    """r -> Q(theta, r) was found to be non-increasing."""


class InconsistencyError(PendulumError, RuntimeError):
    """A computed quantity contradicts a structural guarantee."""


class CircleTooSmallError(PendulumError):
    """The displacement field vanished (numerically) on the index circle."""


class NoSolutionError(PendulumError, ValueError):
    """The requested equation has no solution for these arguments."""


class ConvergenceError(PendulumError, RuntimeError):
    """An iterative solver did not reach its tolerance."""
