"""Exception types raised across the package."""


class ContScaleError(Exception):
    """Base class for all package errors."""


class InputSizeError(ContScaleError, ValueError):
    """Series or embedding too short for the requested operation."""


class DegenerateGeometryError(ContScaleError, ValueError):
    """Zero-diameter point cloud (e.g. a constant series)."""


class DegenerateDataError(ContScaleError, ValueError):
    """No time index has a usable neighbourhood, so no curve can be formed."""


class DivergenceError(ContScaleError, ArithmeticError):
    """A generated trajectory left its admissible region."""


class ParseError(ContScaleError, ValueError):
    """Malformed input file."""


class UndefinedROCError(ContScaleError, ValueError):
    """ROC requested with an empty or complete truth set."""
