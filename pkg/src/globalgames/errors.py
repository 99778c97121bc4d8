"""Exception hierarchy shared by the solvers and the command line."""


class GameError(Exception):
    """Base class for every error raised by this package."""


class DomainError(GameError, ValueError):
    """A parameter lies outside the domain an operation is defined on."""


class ConfigError(DomainError):
    """Malformed configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalError(GameError, ArithmeticError):
    """A numerical routine failed to deliver the requested accuracy."""


class IntegrationError(NumericalError):
    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class ConvergenceError(NumericalError):
    """An iteration did not settle. ``trace`` holds whatever was computed."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InvariantViolation(GameError, AssertionError):
    """A solver produced output that breaks a proven bound."""
