class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class TruncationError(RuntimeError):
    """Dynamic program lost more probability mass than tolerated."""

    def __init__(self, message: str, truncated_mass: float):
        super().__init__(message)
        self.truncated_mass = truncated_mass

    def __reduce__(self):
        # rebuild from both arguments when crossing a process boundary
        return type(self), (self.args[0], self.truncated_mass)


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""
