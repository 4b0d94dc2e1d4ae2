"""
segmul errors.

Every failure raised by the library derives from SegmulError so callers can
catch the whole family; the CLI maps the families to exit codes.
"""


class SegmulError(Exception):
    """Base for all segmul errors."""


class ConfigError(SegmulError, ValueError):
    """Invalid width, splitting point, operand, index or plan parameter."""


class WidthMismatchError(ConfigError):
    """Operands (or products) of different widths were combined."""


class DistributionError(ConfigError):
    """Malformed input distribution or distribution file."""


class CeilingError(SegmulError):
    """Exhaustive evaluation requested above the configured ceiling."""


class RegimeError(SegmulError):
    """Closed form or estimator used outside the regime it was derived for."""


class ImageFormatError(SegmulError):
    """Malformed or unsupported PGM file, or mismatched image planes."""
