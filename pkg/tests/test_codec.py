import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bzc.arrays import BlockedArray, DenseArray, block, gradient_array
from bzc.codec import (
    CodecSettings,
    CompressedArray,
    PruningMask,
    bin_coefficients,
    compress,
    decompress,
    prune_and_flatten,
    specified_coefficients,
    unflatten,
)
from bzc.errors import (
    DimensionMismatch,
    IndexRangeError,
    LengthMismatch,
    NonPowerOfTwoBlock,
)
from bzc.kinds import FloatKind, IndexKind
from bzc.transforms import TransformFamily, forward_transform


def settings_for(block_shape, float_kind=FloatKind.F64, index_kind=IndexKind.I16,
                 transform=TransformFamily.DCT, mask=None):
    return CodecSettings(block_shape, float_kind, index_kind, transform, mask)


def as_blocked(values, block_shape):
    values = np.asarray(values, dtype=np.float64)
    grid = values.shape[: -len(block_shape)]
    original = tuple(g * b for g, b in zip(grid, block_shape))
    return BlockedArray(grid, block_shape, original, FloatKind.F64, values)


# --- binning -----------------------------------------------------------


def test_bin_max_coefficient_maps_to_radius():
    c = as_blocked(np.array([[16.0, 0.0, 0.0, 0.0]]), (4,))
    maxima, indices = bin_coefficients(c, IndexKind.I8)
    assert maxima[0] == 16.0
    assert np.array_equal(indices[0], [127, 0, 0, 0])


def test_bin_zero_block():
    c = as_blocked(np.zeros((1, 4)), (4,))
    maxima, indices = bin_coefficients(c, IndexKind.I8)
    assert maxima[0] == 0.0
    assert not indices.any()


def test_bin_rounds_half_to_even():
    c = as_blocked(np.array([[1.0, 0.5]]), (2,))
    _, indices = bin_coefficients(c, IndexKind.I8)
    # 0.5 * 127 = 63.5 rounds to the even neighbor 64
    assert np.array_equal(indices[0], [127, 64])


@pytest.mark.parametrize("index_kind", list(IndexKind))
def test_bin_indices_within_radius(index_kind, rng):
    c = as_blocked(rng.normal(size=(6, 8)) * 100, (8,))
    _, indices = bin_coefficients(c, index_kind)
    r = index_kind.radius
    assert indices.min() >= -r and indices.max() <= r
    assert indices.dtype == index_kind.dtype


@pytest.mark.parametrize("float_kind", [FloatKind.BF16, FloatKind.F16, FloatKind.F32])
def test_bin_against_rounded_maxima_keeps_indices_in_range(float_kind, rng):
    # stored maxima may round below the true block max; indices must clamp
    c = as_blocked(rng.normal(size=(40, 16)), (16,))
    maxima, indices = bin_coefficients(c, IndexKind.I8, float_kind)
    assert indices.min() >= -127 and indices.max() <= 127


# --- pruning -----------------------------------------------------------


def test_full_mask_flattens_row_major():
    idx = np.arange(8, dtype=np.int16).reshape(1, 2, 4)
    mask = PruningMask.full((2, 4))
    flat = prune_and_flatten(idx, mask)
    assert np.array_equal(flat, np.arange(8).reshape(1, 8))


def test_all_false_mask_keeps_nothing():
    idx = np.ones((3, 2, 2), dtype=np.int16)
    mask = PruningMask.from_bits((2, 2), np.zeros(4, dtype=bool))
    flat = prune_and_flatten(idx, mask)
    assert flat.shape == (3, 0)
    restored = unflatten(flat, mask)
    assert restored.shape == (3, 2, 2)
    assert not restored.any()


def test_corner_drop_mask_keeps_28_of_64():
    # drop the 6x6 square in the higher-index corner of an 8x8 block
    bits = np.ones((8, 8), dtype=bool)
    bits[2:, 2:] = False
    mask = PruningMask.from_bits((8, 8), bits)
    assert mask.kept_count == 28
    idx = np.arange(64, dtype=np.int16).reshape(1, 8, 8)
    flat = prune_and_flatten(idx, mask)
    assert flat.shape == (1, 28)
    back = unflatten(flat, mask)
    assert np.array_equal(back[0][bits], idx[0][bits])
    assert not back[0][~bits].any()


def test_unflatten_round_trip_full_mask():
    idx = np.arange(16, dtype=np.int8).reshape(2, 2, 4)
    mask = PruningMask.full((2, 4))
    assert np.array_equal(unflatten(prune_and_flatten(idx, mask), mask), idx)


def test_unflatten_length_mismatch():
    mask = PruningMask.first_k((4,), 2)
    with pytest.raises(LengthMismatch):
        unflatten(np.zeros((1, 3), dtype=np.int8), mask)


# --- compress / specified coefficients / decompress ---------------------


def test_compress_constant_array():
    a = DenseArray.of(np.full((8, 8), 5.0))
    ca = compress(a, settings_for((8, 8)))
    assert ca.block_count == 1
    n = float(ca.maxima_f64().ravel()[0])
    assert n == pytest.approx(40.0, rel=1e-13)  # 5 * sqrt(64)
    flat = ca.indices.ravel()
    assert flat[0] == 32767
    assert not flat[1:].any()


def test_compress_zero_array():
    ca = compress(DenseArray.of(np.zeros((8, 8))), settings_for((4, 4)))
    assert not ca.maxima_f64().any()
    assert not ca.indices.any()


def test_compress_is_deterministic(rng):
    a = DenseArray.of(rng.normal(size=(12, 9)))
    s = settings_for((4, 2), float_kind=FloatKind.F32, index_kind=IndexKind.I8)
    assert compress(a, s) == compress(a, s)


def test_compress_rejects_rank_mismatch():
    with pytest.raises(DimensionMismatch):
        compress(DenseArray.of(np.zeros((4, 4))), settings_for((4,)))


def test_settings_reject_non_power_of_two():
    with pytest.raises(NonPowerOfTwoBlock):
        settings_for((3, 4))


def test_specified_coefficients_extreme_index_is_exact():
    mask = PruningMask.full((4,))
    s = settings_for((4,), index_kind=IndexKind.I8, mask=mask)
    ca = CompressedArray(
        (4,), s, np.array([16.0]), np.array([[127, 0, 0, 0]], dtype=np.int8)
    )
    chat = specified_coefficients(ca)
    assert np.array_equal(chat.blocks, [[16.0, 0.0, 0.0, 0.0]])


def test_specified_coefficients_zero():
    s = settings_for((4,))
    ca = CompressedArray((8,), s, np.zeros(2), np.zeros((2, 4), dtype=np.int16))
    assert not specified_coefficients(ca).blocks.any()


@pytest.mark.parametrize("index_kind", [IndexKind.I8, IndexKind.I16])
def test_binning_error_within_half_step(index_kind, rng):
    # attainable bound: half the reconstruction-level spacing, N/(2r)
    a = DenseArray.of(rng.uniform(-3, 3, (24, 24)))
    s = settings_for((8, 8), index_kind=index_kind)
    ca = compress(a, s)
    coeffs = forward_transform(block(a, (8, 8)), s.matrices())
    chat = specified_coefficients(ca)
    err = np.abs(chat.blocks - coeffs.blocks)
    limit = ca.maxima_f64()[..., None, None] / (2 * index_kind.radius)
    assert np.all(err <= limit * (1 + 1e-12) + 1e-300)


def test_decompress_constant_round_trip():
    a = DenseArray.of(np.full((8, 8), 5.0))
    out = decompress(compress(a, settings_for((8, 8))))
    assert out.kind is FloatKind.F64
    assert np.allclose(out.values, 5.0, rtol=0, atol=1e-6)


def test_decompress_zero_round_trip():
    out = decompress(compress(DenseArray.of(np.zeros((6, 5))), settings_for((4, 4))))
    assert not out.values.any()


def test_block_l2_error_equals_coefficient_l2_error(rng):
    a = DenseArray.of(rng.uniform(0, 1, (16, 16)))
    s = settings_for((4, 4))
    ca = compress(a, s)
    coeffs = forward_transform(block(a, (4, 4)), s.matrices())
    chat = specified_coefficients(ca)
    coeff_err = np.sqrt(((chat.blocks - coeffs.blocks) ** 2).sum(axis=(2, 3)))
    rebuilt = block(decompress(ca), (4, 4))
    block_err = np.sqrt(((rebuilt.blocks - block(a, (4, 4)).blocks) ** 2).sum(axis=(2, 3)))
    assert np.allclose(block_err, coeff_err, rtol=1e-8, atol=1e-12)


def test_unit_blocks_round_trip_within_ulps(rng):
    a = DenseArray.of(rng.normal(size=(9, 7)))
    s = settings_for((1, 1))
    out = decompress(compress(a, s))
    assert np.all(np.abs(out.values - a.values) <= 4 * np.spacing(np.abs(a.values)))


def test_gradient_round_trip_error_bounded():
    a = gradient_array((16, 16))
    s = settings_for((4, 4))
    ca = compress(a, s)
    out = decompress(ca)
    # elementwise error is at most the sum of per-coefficient errors
    worst = float(np.max(ca.maxima_f64())) / (2 * 32767) * 16
    assert np.abs(out.values - a.values).max() <= worst


def test_pruned_compress_decompress(rng):
    mask = PruningMask.first_k((4, 4), 6)
    a = DenseArray.of(rng.uniform(0, 1, (8, 8)))
    s = settings_for((4, 4), mask=mask)
    ca = compress(a, s)
    assert ca.indices.shape == (2, 2, 6)
    out = decompress(ca)
    assert out.shape == a.shape


def test_compressed_array_validates_index_range():
    s = settings_for((2,), index_kind=IndexKind.I8)
    with pytest.raises(IndexRangeError):
        CompressedArray(
            (2,), s, np.array([1.0]), np.array([[-128, 0]], dtype=np.int8)
        )


@given(
    seed=st.integers(0, 2**31 - 1),
    float_kind=st.sampled_from(list(FloatKind)),
    index_kind=st.sampled_from([IndexKind.I8, IndexKind.I16, IndexKind.I32]),
    family=st.sampled_from([TransformFamily.DCT, TransformFamily.HAAR]),
)
def test_compress_invariants_property(seed, float_kind, index_kind, family):
    rng = np.random.default_rng(seed)
    shape = tuple(int(x) for x in rng.integers(1, 11, size=rng.integers(1, 3)))
    bshape = tuple(int(2 ** rng.integers(0, 3)) for _ in shape)
    a = DenseArray.of(rng.normal(size=shape))
    s = CodecSettings(bshape, float_kind, index_kind, family)
    ca = compress(a, s)
    r = index_kind.radius
    assert ca.indices.size == 0 or (
        ca.indices.min() >= -r and ca.indices.max() <= r
    )
    finite = np.isfinite(ca.maxima_f64())
    assert np.all(ca.maxima_f64()[finite] >= 0)
    assert ca.block_count == math.prod(ca.block_grid)
