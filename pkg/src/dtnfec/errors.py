"""Exception types shared across the package."""


class InfeasibleError(ValueError):
    """The energy budget or forwarding floor cannot be met by any policy."""


class ConstraintInactiveError(ValueError):
    """A threshold-policy formula was queried with tau < sigma(z)."""


class TraceFormatError(ValueError):
    """A contact trace file violates the text format."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid scenario configuration."""
