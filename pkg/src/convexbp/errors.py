"""Exception types raised by the library."""


class ConvexBPError(Exception):
    """Base class for library errors."""


class DegeneratePair(ConvexBPError, ValueError):
    pass


class RootFindFailure(ConvexBPError, RuntimeError):
    pass


class NonConvexBoundary(ConvexBPError, ValueError):
    pass


class OutOfValidRange(ConvexBPError, ValueError):
    pass


class BadDistance(ConvexBPError, ValueError):
    pass


class SupportViolation(ConvexBPError, ValueError):
    pass


class LatticeMismatch(ConvexBPError, ValueError):
    pass


class FormatError(ConvexBPError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
