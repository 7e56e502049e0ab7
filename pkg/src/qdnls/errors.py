"""Exception types shared across modules; the CLI maps each to an exit code."""


class QDNLSError(Exception):
    """Base class for recoverable failures reported by the toolkit."""


class ConfigError(QDNLSError, ValueError):
    """Invalid or unreadable experiment configuration."""


class IrrationalRatioError(QDNLSError, ValueError):
    """A period-based experiment was requested for coefficients without rational ratios."""


class CostGuardError(QDNLSError, RuntimeError):
    """A computation would exceed its configured cost budget."""


class NonConvergenceError(QDNLSError, RuntimeError):
    """Picard iteration failed to contract; ``report`` holds the history."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BlowUpError(QDNLSError, RuntimeError):
    """A field norm exceeded the blow-up guard during time stepping."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t
