"""Exception types raised across the package.

Every error raised by this package derives from :class:`BzcError`, so
callers (notably the CLI) can catch one base class. Names track the
condition they report rather than the module that raises them; several
are shared between the array, codec and operation layers.
"""

__all__ = [
    "BzcError",
    "DimensionMismatch",
    "NonPowerOfTwoBlock",
    "DegenerateShape",
    "LengthMismatch",
    "IndexRangeError",
    "SettingsMismatch",
    "MaskExcludesMeanCoefficient",
    "ZeroNormOperand",
    "NegativeBaseWithFractionalWeight",
    "UnknownOperation",
    "FormatError",
    "TruncatedStream",
    "InvalidTypeCode",
    "ZeroExtent",
    "ArrayFileError",
]


class BzcError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(BzcError):
    """Operands or settings disagree on dimensionality or axis extents."""


class NonPowerOfTwoBlock(BzcError):
    """A block extent or transform size is not a power of two."""


class DegenerateShape(BzcError):
    """A shape admits no valid result (e.g. all extents are 1)."""


class LengthMismatch(BzcError):
    """A flattened index sequence has the wrong length for its mask."""


class IndexRangeError(BzcError):
    """A stored bin index lies outside [-r, r] for its index type."""


class SettingsMismatch(BzcError):
    """Two compressed operands were produced with incompatible settings."""


class MaskExcludesMeanCoefficient(BzcError):
    """The pruning mask drops the first (block-mean) coefficient."""


class ZeroNormOperand(BzcError):
    """An operand with zero norm was passed where a direction is needed."""


class NegativeBaseWithFractionalWeight(BzcError):
    """A similarity term is negative and its exponent is not an integer."""


class UnknownOperation(BzcError):
    """An operation name does not match any supported operation."""


class FormatError(BzcError):
    """Base class for malformed serialized streams."""


class TruncatedStream(FormatError):
    """The stream ended before all declared fields were read."""


class InvalidTypeCode(FormatError):
    """A type or transform code in the stream header is not recognized."""


class ZeroExtent(FormatError):
    """A shape field in the stream contains a zero extent."""


class ArrayFileError(BzcError):
    """A raw array container file is malformed."""
