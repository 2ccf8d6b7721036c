"""Exception types shared across the package."""


class CogatrError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(CogatrError):
    """Invalid acquisition geometry (e.g. bistatic angle out of range)."""


class DegenerateSignal(CogatrError):
    """A signal with no usable content (zero power) was supplied."""


class EmptyCell(CogatrError):
    """Training data left one or more (class, sector) cells unpopulated."""

    def __init__(self, cells):
        self.cells = sorted(cells)
        pairs = ", ".join(f"({c}, sector {s})" for c, s in self.cells)
        super().__init__(f"no training samples for: {pairs}")


class MixedDomain(CogatrError):
    """Feature vectors from different domains were mixed in one operation."""


class DimensionMismatch(CogatrError):
    """Feature vector length does not match the template bank."""


class MissingBank(CogatrError):
    """No template bank was supplied for a required feature domain."""


class NoVotes(CogatrError):
    """Confidence was queried before any votes were cast."""


class ConfigError(CogatrError):
    """An experiment configuration value is missing, malformed, or invalid."""


class UsageError(CogatrError):
    """Command line arguments do not match the CLI grammar."""
