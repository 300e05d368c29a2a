"""Exception types shared across the package."""


class MwaError(Exception):
    """Base class for all package errors."""


class ShapeError(MwaError):
    """Operands have incompatible dimensions."""


class ConfigError(MwaError):
    """A hyperparameter combination or config file is invalid."""


class InputError(MwaError):
    """User-supplied data is out of range or malformed."""


class AlignmentError(MwaError):
    """An external segmentation does not match the character sequence.

    ``index`` is the first character position where the two diverge.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class TapeError(MwaError):
    """Backward was requested in an invalid tape state."""


class DeterminismError(MwaError):
    """A loss function produced different values on repeated evaluation."""
