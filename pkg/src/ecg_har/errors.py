"""Exception hierarchy shared across the package."""


class EcgHarError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(EcgHarError, ValueError):
    """A caller-supplied argument is outside its documented range."""


class NonFiniteSignalError(EcgHarError, ValueError):
    """A signal contains NaN or Inf; carries the first offending index."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite sample at index {index}")


class ConstantSignalError(EcgHarError, ValueError):
    """A signal has (near-)zero variance, so z-scoring is undefined."""


class DecompositionDegenerateError(EcgHarError, ValueError):
    """The signal has no oscillatory mode (fewer than 2 maxima / 2 minima)."""


class TooShortError(EcgHarError, ValueError):
    """A signal is shorter than a required minimum length."""

    def __init__(self, length: int, minimum: int):
        self.length = length
        self.minimum = minimum
        super().__init__(f"signal length {length} is below the required minimum {minimum}")


class ShapeError(EcgHarError, ValueError):
    """A tensor shape does not satisfy an operator's contract."""


class NonFiniteGradientError(EcgHarError, ArithmeticError):
    """A parameter gradient became NaN or Inf; carries the parameter name."""

    def __init__(self, parameter_name: str):
        self.parameter_name = parameter_name
        super().__init__(f"non-finite gradient for parameter '{parameter_name}'")


class PipelineStageError(EcgHarError, RuntimeError):
    """Wraps an error raised inside a named preprocessing stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
