"""Exception hierarchy shared across the toolkit."""


class SpectopoError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SpectopoError):
    """Malformed mesh text. Carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructuralError(SpectopoError):
    """Complex is combinatorially invalid (bad index, missing edge, ...)."""


class ParameterError(SpectopoError, ValueError):
    """Invalid argument value."""


class DomainError(SpectopoError, ValueError):
    """Input outside the mathematical domain (e.g. nonpositive kernel)."""


class SolverError(SpectopoError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (best residual {residual:.3e})")


class FrameError(SpectopoError):
    """Any wire-frame decoding failure."""


class FrameFormatError(FrameError):
    """Bad magic or unsupported version in a wire frame."""


class FrameCorruptionError(FrameError):
    """Checksum mismatch in a wire frame."""


class FrameLengthError(FrameError):
    """Truncated or over-long wire frame."""
