"""Exception types shared across the package."""


class QlstError(Exception):
    """Base class for package-specific failures."""


class ConfigError(QlstError):
    """A configuration document or parameter combination is invalid."""


class SolverError(QlstError):
    """A fixed-point solve did not converge.

    Carries the last iterate and residual so callers can diagnose or
    restart the solve.
    """

    def __init__(self, message, last_value=None, residual=None):
        super().__init__(message)
        self.last_value = last_value
        self.residual = residual


class UnreachableTargetError(QlstError):
    """An inverse solve asked for a value beyond the achievable range.

    ``asymptote`` holds the limiting value of the objective (e.g. the
    quantization-limited ceiling) that makes the target unreachable.
    """

    def __init__(self, message, asymptote=None):
        super().__init__(message)
        self.asymptote = asymptote


class DivergedTrialError(QlstError):
    """A Monte Carlo trial produced non-finite message-passing state."""
