"""Exception types shared across the package."""


class SrmgaError(Exception):
    """Base class for all package errors."""


class ParameterError(SrmgaError, ValueError):
    """A parameter is outside its valid domain."""


class ShapeError(SrmgaError, ValueError):
    """Array or topology dimensions do not agree."""


class QuantizationError(SrmgaError, ValueError):
    """A value is not a member of the quantization scheme's codomain."""


class CheckpointError(SrmgaError):
    """A checkpoint cannot be read or does not match the current run."""


class DataFormatError(SrmgaError, ValueError):
    """A data or network file could not be parsed."""
