"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`StochCompError`, which carries a short machine-readable ``code`` used by
the command-line interface when reporting failures.
"""


class StochCompError(Exception):
    code = "ERROR"


class InvalidArgumentError(StochCompError, ValueError):
    code = "INVALID_ARGUMENT"


class ModelEvaluationError(StochCompError, ArithmeticError):
    code = "MODEL_EVALUATION"


class OutOfRangeError(InvalidArgumentError):
    code = "OUT_OF_RANGE"


class BoundaryError(InvalidArgumentError):
    code = "TRANSFORM_BOUNDARY"


class UnsupportedModelError(StochCompError):
    code = "UNSUPPORTED_MODEL"


class FilteringFailureError(StochCompError, RuntimeError):
    """All particle weights vanished at some observation."""

    code = "FILTERING_FAILURE"

    def __init__(self, message, n=None, theta=None, iteration=None):
        super().__init__(message)
        self.n = n
        self.theta = theta
        self.iteration = iteration


class DegenerateVarianceError(StochCompError, RuntimeError):
    code = "DEGENERATE_VARIANCE"


class SingularInformationError(StochCompError, ArithmeticError):
    code = "SINGULAR_INFORMATION"


class ConfigError(InvalidArgumentError):
    code = "CONFIG"


class DataParseError(InvalidArgumentError):
    code = "PARSE"
