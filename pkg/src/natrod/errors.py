"""Exception hierarchy shared by every natrod module."""


class NatrodError(Exception):
    """Base class for all library errors."""


class InvalidFrameError(NatrodError, ValueError):
    """A matrix is not a proper rotation within tolerance."""


class InsufficientGridError(NatrodError, ValueError):
    pass


class InvalidParameterError(NatrodError, ValueError):
    pass


class PreconditionError(NatrodError, ValueError):
    """Inputs violate an operation's stated precondition."""


class MissingContextError(NatrodError, ValueError):
    """A grid-level quantity was requested without the grid it needs."""


class NonConvergenceError(NatrodError, RuntimeError):
    """A time integrator or iterative solver failed to converge.

    ``diagnostics`` holds whatever state was available at failure time.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
