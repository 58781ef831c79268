"""Exception hierarchy shared by the numerical modules and the CLI."""


class SpdeLdpError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SpdeLdpError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(SpdeLdpError, ValueError):
    """Invalid or incompatible configuration (grids, step sizes, config files)."""


class EvaluationError(SpdeLdpError, ArithmeticError):
    """A user-supplied scalar function produced a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DivergenceError(SpdeLdpError, ArithmeticError):
    """A time-marching scheme produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NotApplicableError(SpdeLdpError, TypeError):
    """The operation only exists for a restricted class of models."""
