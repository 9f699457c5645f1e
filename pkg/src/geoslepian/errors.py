"""Exception types raised across the package."""


class GeoSlepianError(Exception):
    """Base class for all package errors."""


class DomainError(GeoSlepianError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(GeoSlepianError):
    """A request exceeds a configured size or memory guard."""


class NumericError(GeoSlepianError, ArithmeticError):
    """A numerical routine failed (singular system, no convergence)."""


class IngestError(GeoSlepianError, ValueError):
    """Malformed input file; ``line`` is the 1-based offending line if known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CorruptFileError(GeoSlepianError, IOError):
    """Binary artifact failed magic, version, or checksum validation."""
