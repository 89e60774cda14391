"""Exception types shared across the solver modules."""


class SbqcpError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SbqcpError):
    """An argument lies outside the mathematical domain of the operation."""


class NoSolutionError(SbqcpError):
    """The requested solution branch does not exist at these parameters."""


class NoTransitionError(SbqcpError):
    """No quantum phase transition exists in this parameter regime (s > 1)."""


class NonConvergedError(SbqcpError):
    """An iterative solve exhausted its iteration or damping budget."""


class SingularDenominatorError(SbqcpError):
    """A shift formula was evaluated at rho so close to 1 that it is singular."""


class CapExceededError(SbqcpError):
    """A requested exact-diagonalization instance is larger than the configured cap."""


class UsageError(SbqcpError):
    """Invalid command-line or configuration input."""
