"""Orthonormal block transforms.

Transform matrices are laid out with samples along rows and basis
vectors along columns, so column 0 is always the constant vector 1/sqrt(s):
the first coefficient of a transformed block is its mean scaled by
sqrt(block size). Supported families are the type-II cosine basis and the
coarse-to-fine Haar wavelet basis, both restricted to power-of-two sizes
to match the blocking rules.

The forward transform contracts each block axis with the sample index of
its matrix; the inverse contracts with the basis index. Both run in
float64 regardless of the array's element kind.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .arrays import BlockedArray, is_power_of_two
from .errors import DimensionMismatch, NonPowerOfTwoBlock

__all__ = [
    "TransformFamily",
    "TransformMatrix",
    "make_transform",
    "transforms_for",
    "forward_transform",
    "inverse_transform",
]


class TransformFamily(enum.Enum):
    DCT = "dct"
    HAAR = "haar"

    @property
    def code(self) -> int:
        return 0 if self is TransformFamily.DCT else 1

    @classmethod
    def from_code(cls, code: int) -> "TransformFamily":
        return cls.DCT if code == 0 else cls.HAAR

    @classmethod
    def parse(cls, name: str) -> "TransformFamily":
        return cls(name.strip().lower())


@dataclass(frozen=True)
class TransformMatrix:
    """One per-axis orthonormal basis, entries indexed [sample, basis]."""

    size: int
    family: TransformFamily
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, copy=True)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)


def _cosine_matrix(size: int) -> np.ndarray:
    n = np.arange(size, dtype=np.float64)[:, None]  # sample
    k = np.arange(size, dtype=np.float64)[None, :]  # frequency
    scale = np.sqrt((1.0 + (k > 0)) / size)
    return scale * np.cos(np.pi * k * (2.0 * n + 1.0) / (2.0 * size))


def _haar_matrix(size: int) -> np.ndarray:
    # recursive construction, coarse columns first
    h = np.array([[1.0]])
    while h.shape[0] < size:
        lo = np.kron(h, np.array([[1.0], [1.0]])) / np.sqrt(2.0)
        hi = np.kron(np.eye(h.shape[0]), np.array([[1.0], [-1.0]])) / np.sqrt(2.0)
        h = np.hstack([lo, hi])
    return h


@functools.lru_cache(maxsize=None)
def _matrix_entries(size: int, family: TransformFamily) -> np.ndarray:
    if family is TransformFamily.DCT:
        entries = _cosine_matrix(size)
    else:
        entries = _haar_matrix(size)
    entries.flags.writeable = False
    return entries


def make_transform(size: int, family: TransformFamily) -> TransformMatrix:
    """Build the orthonormal basis of the given family for one block size."""
    if not is_power_of_two(size):
        raise NonPowerOfTwoBlock(f"transform size must be a power of two, got {size}")
    return TransformMatrix(size, family, _matrix_entries(size, family))


def transforms_for(block_shape, family: TransformFamily) -> tuple[TransformMatrix, ...]:
    """One transform per axis of a block shape."""
    return tuple(make_transform(s, family) for s in block_shape)


def _check_mats(blocked_shape: tuple[int, ...], mats) -> None:
    if len(mats) != len(blocked_shape):
        raise DimensionMismatch(
            f"{len(mats)} matrices for {len(blocked_shape)} block axes"
        )
    sizes = tuple(m.size for m in mats)
    if sizes != blocked_shape:
        raise DimensionMismatch(
            f"matrix sizes {sizes} do not match block shape {blocked_shape}"
        )


def _contract(blocks: np.ndarray, d: int, mats, axis_of_matrix: int) -> np.ndarray:
    out = np.asarray(blocks, dtype=np.float64)
    for k, mat in enumerate(mats):
        out = np.moveaxis(
            np.tensordot(out, mat.entries, axes=([d + k], [axis_of_matrix])),
            -1,
            d + k,
        )
    return out


def forward_transform(b: BlockedArray, mats) -> BlockedArray:
    """Transform every block into coefficients of the per-axis bases."""
    _check_mats(b.block_shape, mats)
    coeffs = _contract(b.blocks, b.ndim, mats, 0)
    coeffs.flags.writeable = False
    return BlockedArray(b.block_grid, b.block_shape, b.original_shape, b.kind, coeffs)


def inverse_transform(c: BlockedArray, mats) -> BlockedArray:
    """Reassemble every block from its coefficients."""
    _check_mats(c.block_shape, mats)
    blocks = _contract(c.blocks, c.ndim, mats, 1)
    blocks.flags.writeable = False
    return BlockedArray(c.block_grid, c.block_shape, c.original_shape, c.kind, blocks)
