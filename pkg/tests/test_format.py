import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bzc.arrays import DenseArray
from bzc.codec import CodecSettings, CompressedArray, PruningMask, compress
from bzc.errors import InvalidTypeCode, TruncatedStream, ZeroExtent
from bzc.format import bitstream_layout, deserialize, serialize
from bzc.kinds import FloatKind, IndexKind, pattern_dtype, storage_dtype
from bzc.transforms import TransformFamily


def random_compressed(rng, *, float_kind=None, index_kind=None, mask=None):
    d = int(rng.integers(1, 4))
    shape = tuple(int(x) for x in rng.integers(1, 13, size=d))
    bshape = tuple(int(2 ** rng.integers(0, 3)) for _ in range(d))
    float_kind = float_kind or rng.choice(list(FloatKind))
    index_kind = index_kind or rng.choice(list(IndexKind))
    family = rng.choice(list(TransformFamily))
    if mask is None:
        bits = rng.random(bshape) < 0.7
        mask = PruningMask.from_bits(bshape, bits)
    settings = CodecSettings(bshape, float_kind, index_kind, family, mask)
    grid = settings.grid_for(shape)
    maxima_values = np.abs(rng.normal(size=grid)) * 10.0 ** rng.integers(-2, 3)
    from bzc.kinds import to_storage

    maxima = to_storage(maxima_values, float_kind)
    r = index_kind.radius
    low = -min(r, 10**6)
    high = min(r, 10**6)
    indices = rng.integers(low, high + 1, size=grid + (mask.kept_count,)).astype(
        index_kind.dtype
    )
    return CompressedArray(shape, settings, maxima, indices)


def test_round_trip_simple(rng):
    a = compress(
        DenseArray.of(rng.uniform(size=(9, 5))),
        CodecSettings((4, 4), FloatKind.F32, IndexKind.I8),
    )
    assert deserialize(serialize(a)) == a


def test_round_trip_randomized(rng):
    for _ in range(100):
        a = random_compressed(rng)
        assert deserialize(serialize(a)) == a


def test_round_trip_degenerate_all_zero():
    s = CodecSettings((2, 2), FloatKind.F64, IndexKind.I16)
    a = CompressedArray(
        (2, 2), s, np.zeros((1, 1)), np.zeros((1, 1, 4), dtype=np.int16)
    )
    assert deserialize(serialize(a)) == a


def test_round_trip_all_false_mask():
    mask = PruningMask.from_bits((2,), np.zeros(2, dtype=bool))
    s = CodecSettings((2,), FloatKind.F16, IndexKind.I8, TransformFamily.HAAR, mask)
    a = CompressedArray((5,), s, np.array([1.5, 0.0, 2.25], dtype=np.float16),
                        np.zeros((3, 0), dtype=np.int8))
    assert deserialize(serialize(a)) == a


@pytest.mark.parametrize("float_kind", list(FloatKind))
def test_nan_payloads_survive(float_kind):
    s = CodecSettings((1,), float_kind, IndexKind.I8)
    quiet = np.array([0x7FC5], dtype=np.uint16)
    if float_kind is FloatKind.F32:
        quiet = np.array([0x7FC00123], dtype=np.uint32)
    elif float_kind is FloatKind.F64:
        quiet = np.array([0x7FF8000000ABCDEF], dtype=np.uint64)
    maxima = quiet.astype(pattern_dtype(float_kind)).view(storage_dtype(float_kind))
    a = CompressedArray((1,), s, maxima, np.zeros((1, 1), dtype=np.int8))
    back = deserialize(serialize(a))
    assert np.array_equal(back.maxima_bits(), a.maxima_bits())


def test_layout_matches_closed_form(rng):
    for _ in range(25):
        a = random_compressed(rng)
        layout = bitstream_layout(a)
        s = a.settings
        d = s.ndim
        blocks = a.block_count
        expected = (
            4
            + 8
            + 64 * d
            + 64
            + 64 * d
            + s.block_size
            + s.float_kind.bits * blocks
            + s.index_kind.bits * s.mask.kept_count * blocks
        )
        assert layout.content_bits == expected
        assert layout.total_bits == expected + (-expected) % 8
        assert len(serialize(a)) == layout.total_bytes


def test_layout_field_order():
    s = CodecSettings((4,), FloatKind.F32, IndexKind.I16)
    a = CompressedArray((4,), s, np.zeros(1, dtype=np.float32),
                        np.zeros((1, 4), dtype=np.int16))
    names = [f[0] for f in bitstream_layout(a).fields]
    assert names == [
        "float_kind", "index_kind", "transform", "original_shape",
        "shape_marker", "block_shape", "mask", "maxima", "indices", "padding",
    ]


def test_serialized_ratio_full_mask_reference_point():
    # (3, 224, 224), blocks (4,4,4), F32/I16, full mask: ratio ~ 2.91
    s = CodecSettings((4, 4, 4), FloatKind.F32, IndexKind.I16)
    shape = (3, 224, 224)
    blocks = math.prod(s.grid_for(shape))
    a = CompressedArray(
        shape,
        s,
        np.zeros(s.grid_for(shape), dtype=np.float32),
        np.zeros(s.grid_for(shape) + (64,), dtype=np.int16),
    )
    stream = serialize(a)
    measured = 64 * math.prod(shape) / (8 * len(stream))
    assert measured == pytest.approx(64 * math.prod(shape) / ((32 + 16 * 64) * blocks),
                                     rel=0.01)


def test_serialized_ratio_half_mask_i8():
    mask = PruningMask.first_k((4, 4, 4), 32)
    s = CodecSettings((4, 4, 4), FloatKind.F32, IndexKind.I8, mask=mask)
    shape = (3, 224, 224)
    grid = s.grid_for(shape)
    a = CompressedArray(
        shape, s, np.zeros(grid, dtype=np.float32),
        np.zeros(grid + (32,), dtype=np.int8),
    )
    stream = serialize(a)
    measured = 64 * math.prod(shape) / (8 * len(stream))
    assert measured == pytest.approx(10.666666666666666, rel=0.01)


def test_deserialize_ignores_trailing_bytes(rng):
    a = random_compressed(rng)
    assert deserialize(serialize(a) + b"\xff\xff\xff") == a


def test_deserialize_empty_stream():
    with pytest.raises(TruncatedStream):
        deserialize(b"")


def test_deserialize_truncated_body(rng):
    stream = serialize(random_compressed(rng))
    with pytest.raises(TruncatedStream):
        deserialize(stream[: len(stream) // 2])


def test_deserialize_header_only():
    # float/index codes plus transform byte, then nothing
    stream = bytes([0b0000_0000, 0b0000_0000])
    with pytest.raises(TruncatedStream):
        deserialize(stream)


def test_deserialize_invalid_transform_code():
    s = CodecSettings((2,), FloatKind.F32, IndexKind.I8)
    a = CompressedArray((2,), s, np.zeros(1, dtype=np.float32),
                        np.zeros((1, 2), dtype=np.int8))
    data = bytearray(serialize(a))
    data[0] |= 0b1111_0000  # transform byte occupies bits 4..11
    with pytest.raises(InvalidTypeCode):
        deserialize(bytes(data))


def test_deserialize_zero_extent_shape():
    # header then an immediate zero marker: empty shape
    bits = np.zeros(12 + 64, dtype=np.uint8)
    data = np.packbits(bits, bitorder="little").tobytes()
    with pytest.raises(ZeroExtent):
        deserialize(data)


def test_deserialize_zero_block_extent():
    s = CodecSettings((2,), FloatKind.F32, IndexKind.I8)
    a = CompressedArray((2,), s, np.zeros(1, dtype=np.float32),
                        np.zeros((1, 2), dtype=np.int8))
    data = bytearray(serialize(a))
    # block shape starts after 12 + 64 + 64 bits = 17.5 bytes; zero the word
    bit_start = 12 + 64 + 64
    for bit in range(bit_start, bit_start + 64):
        data[bit // 8] &= ~(1 << (bit % 8))
    with pytest.raises(ZeroExtent):
        deserialize(bytes(data))


def test_deserialize_out_of_range_index_rejected():
    s = CodecSettings((1,), FloatKind.F32, IndexKind.I8)
    a = CompressedArray((1,), s, np.zeros(1, dtype=np.float32),
                        np.zeros((1, 1), dtype=np.int8))
    data = bytearray(serialize(a))
    layout = bitstream_layout(a)
    offset = dict((f[0], f[1]) for f in layout.fields)["indices"]
    # write -128 (0b10000000) into the sole index slot
    data[offset // 8] &= ~(0xFF << (offset % 8)) & 0xFF
    bit = offset + 7
    data[bit // 8] |= 1 << (bit % 8)
    from bzc.errors import IndexRangeError

    with pytest.raises(IndexRangeError):
        deserialize(bytes(data))


@given(seed=st.integers(0, 2**31 - 1))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    a = random_compressed(rng)
    back = deserialize(serialize(a))
    assert back == a
    assert back.settings.transform is a.settings.transform
