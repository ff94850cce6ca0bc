"""Bit-exact serialization of compressed arrays (`.bzc` streams).

The stream is a dense bit sequence, least-significant bit first within
each byte, with multi-bit fields stored little-endian:

====================  ===========================================
field                 bits
====================  ===========================================
float kind code       2   (BF16=0, F16=1, F32=2, F64=3)
index kind code       2   (I8=0, I16=1, I32=2, I64=3)
transform code        8   (DCT=0, Haar=1; one byte beyond the
                          4-bit type accounting, excluded from
                          ratio formulas)
original shape        64 per extent
end-of-shape marker   64  (a zero word; extents are >= 1)
block shape           64 per extent (count known after the marker)
pruning mask          1 per intrablock position, row-major
maxima                float-kind width per block, raw bit
                      patterns, row-major grid order
indices               index-kind width per kept index, two's
                      complement, blocks row-major
padding               zero bits to the next byte boundary
====================  ===========================================

Round trips are bit-exact, including NaN payloads in the maxima. The
stream is the complete file content; there is no outer container.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import CodecSettings, CompressedArray, PruningMask
from .errors import InvalidTypeCode, TruncatedStream, ZeroExtent
from .kinds import FloatKind, IndexKind, pattern_dtype, storage_dtype
from .transforms import TransformFamily

__all__ = ["BitstreamLayout", "bitstream_layout", "serialize", "deserialize"]

_SHAPE_WORD_BITS = 64


@dataclass(frozen=True)
class BitstreamLayout:
    """Ordered (field name, bit offset, bit length) records for one stream."""

    fields: tuple[tuple[str, int, int], ...]

    @property
    def content_bits(self) -> int:
        name, offset, length = self.fields[-1]
        assert name == "padding"
        return offset

    @property
    def total_bits(self) -> int:
        name, offset, length = self.fields[-1]
        return offset + length

    @property
    def total_bytes(self) -> int:
        return self.total_bits // 8


def _layout_fields(a: CompressedArray) -> tuple[tuple[str, int, int], ...]:
    s = a.settings
    d = s.ndim
    blocks = a.block_count
    fields = []
    pos = 0
    for name, length in (
        ("float_kind", 2),
        ("index_kind", 2),
        ("transform", 8),
        ("original_shape", _SHAPE_WORD_BITS * d),
        ("shape_marker", _SHAPE_WORD_BITS),
        ("block_shape", _SHAPE_WORD_BITS * d),
        ("mask", s.block_size),
        ("maxima", s.float_kind.bits * blocks),
        ("indices", s.index_kind.bits * s.mask.kept_count * blocks),
    ):
        fields.append((name, pos, length))
        pos += length
    fields.append(("padding", pos, (-pos) % 8))
    return tuple(fields)


def bitstream_layout(a: CompressedArray) -> BitstreamLayout:
    return BitstreamLayout(_layout_fields(a))


def _bits_of(values: np.ndarray, width: int) -> np.ndarray:
    """Expand unsigned values to a flat LSB-first bit array.

    Works one bit position at a time so peak memory stays near the
    one-byte-per-bit output instead of eight.
    """
    vals = np.asarray(values, dtype=np.uint64).ravel()
    out = np.empty((vals.size, width), dtype=np.uint8)
    for j in range(width):
        np.bitwise_and(vals >> np.uint64(j), np.uint64(1), out=out[:, j],
                       casting="unsafe")
    return out.ravel()


def serialize(a: CompressedArray) -> bytes:
    """Encode a compressed array as its byte stream."""
    s = a.settings
    idx_width = s.index_kind.bits
    idx_mask = np.uint64((1 << idx_width) - 1)
    chunks = [
        _bits_of([s.float_kind.code], 2),
        _bits_of([s.index_kind.code], 2),
        _bits_of([s.transform.code], 8),
        _bits_of(list(a.original_shape), _SHAPE_WORD_BITS),
        _bits_of([0], _SHAPE_WORD_BITS),
        _bits_of(list(s.block_shape), _SHAPE_WORD_BITS),
        s.mask.bits.ravel().astype(np.uint8),
        _bits_of(a.maxima_bits().ravel(), s.float_kind.bits),
        _bits_of(
            a.indices.ravel().astype(np.int64).astype(np.uint64) & idx_mask,
            idx_width,
        ),
    ]
    bits = np.concatenate(chunks)
    return np.packbits(bits, bitorder="little").tobytes()


class _Reader:
    def __init__(self, data: bytes):
        self.bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
        self.pos = 0

    def take(self, n: int) -> np.ndarray:
        if self.pos + n > self.bits.size:
            raise TruncatedStream(
                f"needed {n} bits at offset {self.pos}, "
                f"stream has {self.bits.size}"
            )
        out = self.bits[self.pos : self.pos + n]
        self.pos += n
        return out

    def uint(self, width: int) -> int:
        return int(self.uints(1, width)[0])

    def uints(self, count: int, width: int) -> np.ndarray:
        bits = self.take(count * width).reshape(count, width)
        out = np.zeros(count, dtype=np.uint64)
        for j in range(width):  # column-wise keeps peak memory bounded
            out |= bits[:, j].astype(np.uint64) << np.uint64(j)
        return out

    def ints(self, count: int, width: int) -> np.ndarray:
        u = self.uints(count, width)
        if width == 64:
            return u.view(np.int64)
        out = u.astype(np.int64)
        out[u >= (1 << (width - 1))] -= 1 << width
        return out


def deserialize(data: bytes) -> CompressedArray:
    """Decode a byte stream produced by :func:`serialize`.

    Trailing padding is ignored. Raises :class:`TruncatedStream`,
    :class:`InvalidTypeCode` or :class:`ZeroExtent` on malformed input.
    """
    r = _Reader(data)
    float_kind = FloatKind.from_code(r.uint(2))
    index_kind = IndexKind.from_code(r.uint(2))
    transform_code = r.uint(8)
    if transform_code not in (0, 1):
        raise InvalidTypeCode(f"unknown transform code {transform_code}")
    transform = TransformFamily.from_code(transform_code)

    shape = []
    while True:
        word = r.uint(_SHAPE_WORD_BITS)
        if word == 0:
            break
        shape.append(word)
    if not shape:
        raise ZeroExtent("shape is empty (zero extent before any valid extent)")
    d = len(shape)

    block_shape = [r.uint(_SHAPE_WORD_BITS) for _ in range(d)]
    if any(b == 0 for b in block_shape):
        raise ZeroExtent(f"block shape {tuple(block_shape)} contains a zero extent")

    # math.prod: exact for adversarial extents, unlike wrapping int64 products
    mask_bits = r.take(math.prod(block_shape))
    mask = PruningMask.from_bits(tuple(block_shape), mask_bits.astype(bool))
    settings = CodecSettings(
        tuple(block_shape), float_kind, index_kind, transform, mask
    )

    grid = settings.grid_for(tuple(shape))
    blocks = math.prod(grid)
    patterns = r.uints(blocks, float_kind.bits).astype(pattern_dtype(float_kind))
    maxima = patterns.view(storage_dtype(float_kind)).reshape(grid)

    kept = mask.kept_count
    raw = r.ints(blocks * kept, index_kind.bits)
    indices = raw.reshape(grid + (kept,)).astype(index_kind.dtype)
    return CompressedArray(tuple(shape), settings, maxima, indices)
