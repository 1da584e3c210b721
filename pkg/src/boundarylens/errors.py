"""Exception types shared across the package."""


class ZeroVectorError(ValueError):
    """A vector that must have nonzero norm is (numerically) zero."""


class NotSymmetricError(ValueError):
    """A matrix violated the symmetry tolerance."""


class TooLargeError(ValueError):
    """Problem dimension exceeds the configured dense-solver cap."""


class DimMismatchError(ValueError):
    """Two decompositions or vectors have incompatible dimensions."""


class ShapeMismatchError(ValueError):
    """Input or parameter shapes do not match the network layout."""


class InvalidLabelError(ValueError):
    """A class label is outside [0, n_classes)."""


class UnsupportedArchitectureError(ValueError):
    """The requested transformation needs a different architecture."""


class EmptyClassError(ValueError):
    """The dataset contains no samples of the requested class."""


class UnknownKindError(ValueError):
    """Unrecognized generator / loss / optimizer kind."""


class DatasetParseError(ValueError):
    """A data file could not be parsed; carries the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class WrongColumnCountError(DatasetParseError):
    """A CSV row has the wrong number of columns."""


class BadMagicError(ValueError):
    """An IDX file starts with an unexpected magic number."""


class TruncatedFileError(ValueError):
    """An IDX file is shorter than its header promises."""


class NotEnoughSamplesError(ValueError):
    """A class has fewer samples than requested."""


class WrongDimError(ValueError):
    """Operation requires a specific input dimensionality."""


class ClassTooSmallError(ValueError):
    """A stratified split would leave a class with no training samples."""


class DivergedError(RuntimeError):
    """Training produced a non-finite loss."""


class AuxTrainingFailedError(RuntimeError):
    """An auxiliary fit (random-label or pretraining phase) did not reach
    full training accuracy within its epoch budget."""


class NoProgressError(RuntimeError):
    """Boundary search never improved on its starting alignment."""

    def __init__(self, message, x_start=None, achieved=None, iterations=None):
        super().__init__(message)
        self.x_start = x_start
        self.achieved = achieved
        self.iterations = iterations
