"""
Error types for the UniDA3D engine.

Every error carries the process exit code the CLI reports for it.
"""


class UniDAError(Exception):
    """Base class for all engine errors"""

    exit_code: int = 1


class ShapeError(UniDAError, ValueError):
    """Dimension mismatch between operands"""

    exit_code = 4


class BoundsError(ShapeError):
    """Index or coordinate outside the valid range"""


class ArgumentError(UniDAError, ValueError):
    """Invalid scalar argument"""

    exit_code = 2


class StateError(UniDAError, RuntimeError):
    """Operation invoked in the wrong state (missing gradient, untrained model)"""

    exit_code = 4


class NumericError(UniDAError, ArithmeticError):
    """Non-finite value where a finite one is required"""

    exit_code = 4


class EmptyProjectionError(UniDAError, ValueError):
    """No point of a frame projects into its image"""

    exit_code = 3


class NoValidPointsError(UniDAError, ValueError):
    """All labels of a loss evaluation are ignored"""

    exit_code = 4


class UndefinedMetricError(UniDAError, ArithmeticError):
    """Metric undefined for the given counts"""

    exit_code = 4


class SpecError(UniDAError, ValueError):
    """Degenerate generator specification"""

    exit_code = 2


class ConfigError(UniDAError, ValueError):
    """Invalid experiment configuration"""

    exit_code = 2


class FormatError(UniDAError, ValueError):
    """Corrupt, truncated or version-mismatched file"""

    exit_code = 3

    def __init__(self, message: str, path: object = None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class IntegrityError(FormatError):
    """Stored hash does not match content"""
