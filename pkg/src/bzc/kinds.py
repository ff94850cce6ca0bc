"""Element type descriptors and precision emulation.

Array values are held in float64 throughout the pipeline; the narrower
kinds (BF16, F16, F32) exist as *rounding targets*. :func:`round_to_kind`
performs IEEE round-to-nearest-even into the requested format, including
subnormals and overflow to infinity, so that a float64 array can stand in
for a narrow array exactly: a value survives a round trip through its
kind unchanged. Per-block maxima are additionally *stored* in the native
width (see :func:`storage_dtype`) so serialization is a plain bit copy.
"""

from __future__ import annotations

import enum

import ml_dtypes
import numpy as np

__all__ = [
    "FloatKind",
    "IndexKind",
    "round_to_kind",
    "storage_dtype",
    "to_storage",
    "from_storage",
    "pattern_dtype",
]


class FloatKind(enum.Enum):
    """A supported floating-point element format."""

    BF16 = "bf16"
    F16 = "f16"
    F32 = "f32"
    F64 = "f64"

    @property
    def bits(self) -> int:
        return _FLOAT_INFO[self][0]

    @property
    def significand_bits(self) -> int:
        """Stored (explicit) significand bits, excluding the implicit one."""
        return _FLOAT_INFO[self][1]

    @property
    def exponent_bits(self) -> int:
        return _FLOAT_INFO[self][2]

    @property
    def precision(self) -> int:
        """Significand precision including the implicit leading bit."""
        return self.significand_bits + 1

    @property
    def max_exponent(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def min_exponent(self) -> int:
        """Smallest unbiased exponent of a normal number."""
        return 1 - self.max_exponent

    @property
    def max_finite(self) -> float:
        return float((2.0 - 2.0 ** (1 - self.precision)) * 2.0 ** self.max_exponent)

    @property
    def code(self) -> int:
        """2-bit code used in serialized headers."""
        return _FLOAT_CODE[self]

    @classmethod
    def from_code(cls, code: int) -> "FloatKind":
        return _FLOAT_BY_CODE[code]

    @classmethod
    def parse(cls, name: str) -> "FloatKind":
        return cls(name.strip().lower())


# kind -> (total bits, stored significand bits, exponent bits)
_FLOAT_INFO = {
    FloatKind.BF16: (16, 7, 8),
    FloatKind.F16: (16, 10, 5),
    FloatKind.F32: (32, 23, 8),
    FloatKind.F64: (64, 52, 11),
}

_FLOAT_CODE = {
    FloatKind.BF16: 0,
    FloatKind.F16: 1,
    FloatKind.F32: 2,
    FloatKind.F64: 3,
}
_FLOAT_BY_CODE = {v: k for k, v in _FLOAT_CODE.items()}

_STORAGE_DTYPE = {
    FloatKind.BF16: np.dtype(ml_dtypes.bfloat16),
    FloatKind.F16: np.dtype(np.float16),
    FloatKind.F32: np.dtype(np.float32),
    FloatKind.F64: np.dtype(np.float64),
}

# unsigned dtype with the same width, for raw bit patterns
_PATTERN_DTYPE = {
    FloatKind.BF16: np.dtype(np.uint16),
    FloatKind.F16: np.dtype(np.uint16),
    FloatKind.F32: np.dtype(np.uint32),
    FloatKind.F64: np.dtype(np.uint64),
}


class IndexKind(enum.Enum):
    """A supported signed integer bin-index format."""

    I8 = "i8"
    I16 = "i16"
    I32 = "i32"
    I64 = "i64"

    @property
    def bits(self) -> int:
        return _INDEX_BITS[self]

    @property
    def radius(self) -> int:
        """Largest representable magnitude r = 2**(b-1) - 1."""
        return 2 ** (self.bits - 1) - 1

    @property
    def dtype(self) -> np.dtype:
        return _INDEX_DTYPE[self]

    @property
    def clamp_bound(self) -> float:
        """Largest float64 not exceeding the radius.

        Equal to the radius for widths up to 32 bits; for I64 the radius
        2**63 - 1 is not a float64, so the bound is the next value down
        (2**63 - 1024). Binning clamps against this before casting.
        """
        r = float(self.radius)
        if r > self.radius:
            r = np.nextafter(r, 0.0)
        return float(r)

    @property
    def code(self) -> int:
        """2-bit code used in serialized headers."""
        return _INDEX_CODE[self]

    @classmethod
    def from_code(cls, code: int) -> "IndexKind":
        return _INDEX_BY_CODE[code]

    @classmethod
    def parse(cls, name: str) -> "IndexKind":
        return cls(name.strip().lower())


_INDEX_BITS = {
    IndexKind.I8: 8,
    IndexKind.I16: 16,
    IndexKind.I32: 32,
    IndexKind.I64: 64,
}

_INDEX_DTYPE = {
    IndexKind.I8: np.dtype(np.int8),
    IndexKind.I16: np.dtype(np.int16),
    IndexKind.I32: np.dtype(np.int32),
    IndexKind.I64: np.dtype(np.int64),
}

_INDEX_CODE = {
    IndexKind.I8: 0,
    IndexKind.I16: 1,
    IndexKind.I32: 2,
    IndexKind.I64: 3,
}
_INDEX_BY_CODE = {v: k for k, v in _INDEX_CODE.items()}


def round_to_kind(values: np.ndarray, kind: FloatKind) -> np.ndarray:
    """Round float64 values to the nearest representable value of `kind`.

    Ties go to even. Values beyond the format's overflow threshold become
    signed infinity; NaN, infinities and signed zeros pass through. The
    result is a new float64 array.
    """
    x = np.asarray(values, dtype=np.float64)
    if kind is FloatKind.F64:
        return x.copy()
    out = x.copy()
    with np.errstate(all="ignore"):
        finite = np.isfinite(x) & (x != 0.0)
        _, e = np.frexp(x)  # |x| = m * 2**e with m in [0.5, 1)
        exp = np.maximum(e - 1, kind.min_exponent)
        quantum = np.ldexp(1.0, exp - kind.significand_bits)
        rounded = np.rint(x / quantum) * quantum
        overflowed = np.abs(rounded) > kind.max_finite
        rounded = np.where(overflowed, np.copysign(np.inf, x), rounded)
        np.copyto(out, rounded, where=finite)
    return out


def storage_dtype(kind: FloatKind) -> np.dtype:
    """Native numpy dtype used to store values of `kind`."""
    return _STORAGE_DTYPE[kind]


def pattern_dtype(kind: FloatKind) -> np.dtype:
    """Unsigned dtype whose width matches `kind`, for raw bit patterns."""
    return _PATTERN_DTYPE[kind]


def to_storage(values: np.ndarray, kind: FloatKind) -> np.ndarray:
    """Round float64 values into `kind` and store them in its native dtype."""
    return round_to_kind(values, kind).astype(storage_dtype(kind))


def from_storage(values: np.ndarray) -> np.ndarray:
    """Widen stored values back to float64 (exact for every kind)."""
    return values.astype(np.float64)
