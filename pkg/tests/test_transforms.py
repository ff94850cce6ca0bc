import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bzc.arrays import BlockedArray, DenseArray, block
from bzc.errors import DimensionMismatch, NonPowerOfTwoBlock
from bzc.kinds import FloatKind
from bzc.transforms import (
    TransformFamily,
    forward_transform,
    inverse_transform,
    make_transform,
    transforms_for,
)
from oracles import HAAR_2, HAAR_4, dct_matrix_oracle

SIZES = [1, 2, 4, 8, 16, 32]
FAMILIES = [TransformFamily.DCT, TransformFamily.HAAR]


def test_dct4_first_column_constant():
    h = make_transform(4, TransformFamily.DCT).entries
    assert np.allclose(h[:, 0], 0.5, rtol=0, atol=1e-15)


def test_dct4_entry_two_two():
    h = make_transform(4, TransformFamily.DCT).entries
    assert h[1, 1] == pytest.approx(
        math.sqrt(2 / 4) * math.cos(3 * math.pi / 8), abs=1e-15
    )


@pytest.mark.parametrize("size", SIZES)
def test_dct_matches_scipy_oracle(size):
    h = make_transform(size, TransformFamily.DCT).entries
    assert np.allclose(h, dct_matrix_oracle(size), rtol=0, atol=1e-14)


def test_haar_small_matrices():
    assert np.allclose(make_transform(2, TransformFamily.HAAR).entries, HAAR_2)
    assert np.allclose(make_transform(4, TransformFamily.HAAR).entries, HAAR_4)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("size", SIZES)
def test_orthonormality(size, family):
    h = make_transform(size, family).entries
    err = np.abs(h.T @ h - np.eye(size)).max()
    assert err < 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_first_column_is_constant(family):
    for size in SIZES:
        h = make_transform(size, family).entries
        assert np.allclose(h[:, 0], 1 / math.sqrt(size), rtol=0, atol=1e-15)


def test_rejects_non_power_of_two():
    with pytest.raises(NonPowerOfTwoBlock):
        make_transform(3, TransformFamily.DCT)


@pytest.mark.parametrize("family", FAMILIES)
def test_constant_block_concentrates_in_first_coefficient(family):
    v = 2.75
    a = DenseArray.of(np.full((4, 8), v))
    b = block(a, (4, 8))
    c = forward_transform(b, transforms_for((4, 8), family))
    coeffs = c.blocks[0, 0]
    assert coeffs[0, 0] == pytest.approx(v * math.sqrt(32), rel=1e-14)
    rest = coeffs.copy()
    rest[0, 0] = 0.0
    assert np.abs(rest).max() < 1e-12


def test_unit_impulse_extracts_matrix_row():
    a = DenseArray.of(np.array([1.0, 0.0, 0.0, 0.0]))
    mats = transforms_for((4,), TransformFamily.DCT)
    c = forward_transform(block(a, (4,)), mats)
    # direct matrix-multiply oracle: coefficients are H^T @ e_0 = first row
    want = mats[0].entries.T @ np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(c.blocks[0], want, rtol=0, atol=1e-15)
    assert np.allclose(c.blocks[0], mats[0].entries[0], rtol=0, atol=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_norm_preservation(family, rng):
    a = DenseArray.of(rng.normal(size=(8, 8)))
    b = block(a, (8, 8))
    c = forward_transform(b, transforms_for((8, 8), family))
    assert np.linalg.norm(c.blocks) == pytest.approx(
        np.linalg.norm(b.blocks), rel=1e-10
    )


@given(
    seed=st.integers(0, 2**31 - 1),
    family=st.sampled_from(FAMILIES),
    exps=st.lists(st.integers(0, 3), min_size=1, max_size=3),
)
def test_round_trip_property(seed, family, exps):
    rng = np.random.default_rng(seed)
    bshape = tuple(2**e for e in exps)
    shape = tuple(rng.integers(1, 2 * b + 1) for b in bshape)
    a = DenseArray.of(rng.normal(size=shape))
    b = block(a, bshape)
    mats = transforms_for(bshape, family)
    restored = inverse_transform(forward_transform(b, mats), mats)
    assert np.allclose(restored.blocks, b.blocks, rtol=1e-10, atol=1e-12)


def test_zero_coefficients_invert_to_zero():
    zeros = BlockedArray((2,), (4,), (8,), FloatKind.F64, np.zeros((2, 4)))
    mats = transforms_for((4,), TransformFamily.DCT)
    assert not inverse_transform(zeros, mats).blocks.any()


def test_constant_coefficient_inverts_to_constant_block():
    v = -1.5
    coeffs = np.zeros((1, 8))
    coeffs[0, 0] = v * math.sqrt(8)
    c = BlockedArray((1,), (8,), (8,), FloatKind.F64, coeffs)
    mats = transforms_for((8,), TransformFamily.DCT)
    restored = inverse_transform(c, mats)
    assert np.allclose(restored.blocks, v, rtol=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
def test_dot_product_preservation(family, rng):
    mats = transforms_for((4, 4), family)
    for _ in range(20):
        u = DenseArray.of(rng.normal(size=(4, 4)))
        v = DenseArray.of(rng.normal(size=(4, 4)))
        cu = forward_transform(block(u, (4, 4)), mats)
        cv = forward_transform(block(v, (4, 4)), mats)
        direct = float(np.dot(u.values.ravel(), v.values.ravel()))
        transformed = float(np.dot(cu.blocks.ravel(), cv.blocks.ravel()))
        tol = 1e-9 * np.linalg.norm(u.values) * np.linalg.norm(v.values)
        assert abs(direct - transformed) <= tol


def test_mismatched_matrices_rejected():
    b = block(DenseArray.of(np.zeros((4, 4))), (4, 4))
    with pytest.raises(DimensionMismatch):
        forward_transform(b, transforms_for((4,), TransformFamily.DCT))
    with pytest.raises(DimensionMismatch):
        forward_transform(b, transforms_for((8, 8), TransformFamily.DCT))
