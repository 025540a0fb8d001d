"""Exception types raised across the package."""


class AssignError(Exception):
    """Base class for every error raised by this package."""


class DegenerateBox(AssignError, ValueError):
    pass


class CollinearInput(AssignError, ValueError):
    pass


class SingularCovariance(AssignError, ValueError):
    pass


class InvalidGaussian(AssignError, ValueError):
    pass


class EmptyImage(AssignError, ValueError):
    pass


class EmptyOffsets(AssignError, ValueError):
    pass


class PlacementFailure(AssignError, RuntimeError):
    pass


class BinMismatch(AssignError, ValueError):
    pass


class UnknownCategory(AssignError, KeyError):
    pass


class ConfigError(AssignError, ValueError):
    pass


class SinkError(AssignError, OSError):
    pass


class ParseError(AssignError, ValueError):
    """A malformed annotation line.

    Attributes:
        line: 1-based line number in the input text.
        reason: short human-readable description.
    """

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvariantViolation(AssignError, RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
