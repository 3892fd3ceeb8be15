class DetectorError(Exception):
    """Base class for every error raised by the detector services."""


class EmptySampleSetError(DetectorError, ValueError):
    def __init__(self, message="empty sample set"):
        super().__init__(message)


class DimensionMismatchError(DetectorError, ValueError):
    pass


class InsufficientSamplesError(DetectorError, ValueError):
    def __init__(self, message="need at least two samples"):
        super().__init__(message)


class NotSymmetricError(DetectorError, ValueError):
    pass


class EigenConvergenceError(DetectorError, ArithmeticError):
    pass


class NegativeEigenvalueError(DetectorError, ArithmeticError):
    pass


class DegenerateDataError(DetectorError, ValueError):
    def __init__(self, message="degenerate data (zero variance)"):
        super().__init__(message)


class WhitenedNullSpaceError(DetectorError, ArithmeticError):
    """Raised when W^t x is the zero vector, so the whitened cosine is undefined."""

    def __init__(self, operand):
        self.operand = operand
        super().__init__(f"vector in whitened null space: {operand}")


class ZeroVectorError(DetectorError, ValueError):
    pass


class ImageLoadError(DetectorError, OSError):
    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class UnsupportedFormatError(ImageLoadError):
    pass


class DatasetError(DetectorError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelFormatError(DetectorError, ValueError):
    pass


class NonFiniteValueError(DetectorError, ValueError):
    pass


class ParameterError(DetectorError, ValueError):
    pass
