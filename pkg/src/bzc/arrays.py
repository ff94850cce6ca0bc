"""Dense N-dimensional arrays, blocking, and synthetic data.

A :class:`DenseArray` couples a float64 value buffer with the element
kind those values are understood to have; construction verifies every
value survives a round trip through that kind. :func:`block` cuts an
array into a grid of equally shaped blocks, zero-padding the tail of
each axis, and :func:`unblock` inverts it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShape, DimensionMismatch, NonPowerOfTwoBlock
from .kinds import FloatKind, round_to_kind

__all__ = [
    "DenseArray",
    "BlockedArray",
    "convert_precision",
    "block",
    "unblock",
    "gradient_array",
    "validate_shape",
    "is_power_of_two",
    "grid_shape",
]


def validate_shape(dims) -> tuple[int, ...]:
    """Normalize a shape to a tuple of positive ints, or raise."""
    shape = tuple(int(d) for d in dims)
    if len(shape) < 1:
        raise DegenerateShape("shape must have at least one axis")
    if any(d < 1 for d in shape):
        raise DegenerateShape(f"every extent must be >= 1, got {shape}")
    return shape


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def grid_shape(shape: tuple[int, ...], block_shape: tuple[int, ...]) -> tuple[int, ...]:
    """Blocks per axis: ceil(shape / block_shape)."""
    return tuple(-(-s // b) for s, b in zip(shape, block_shape))


def _frozen(values: np.ndarray) -> np.ndarray:
    """A read-only float64 C-order view of `values`, copying only when needed.

    A caller-owned writeable array is copied so later mutation cannot leak
    in; arrays that are already frozen (ours, passed back in) and fresh
    conversions are adopted without another copy.
    """
    out = np.asarray(values, dtype=np.float64, order="C")
    if out is values and out.flags.writeable:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DenseArray:
    """An N-dimensional array of `kind` values backed by float64 storage."""

    shape: tuple[int, ...]
    kind: FloatKind
    values: np.ndarray

    def __post_init__(self):
        shape = validate_shape(self.shape)
        object.__setattr__(self, "shape", shape)
        values = _frozen(self.values)
        if values.shape != shape:
            raise DimensionMismatch(
                f"value buffer shaped {values.shape} does not match shape {shape}"
            )
        if self.kind is not FloatKind.F64:
            rounded = round_to_kind(values, self.kind)
            if not np.array_equal(rounded, values, equal_nan=True):
                raise ValueError(
                    f"values are not exactly representable as {self.kind.value}"
                )
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, values, kind: FloatKind = FloatKind.F64) -> "DenseArray":
        """Build an array from arbitrary values, rounding them into `kind`."""
        arr = np.asarray(values, dtype=np.float64)
        return cls(arr.shape, kind, round_to_kind(arr, kind))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class BlockedArray:
    """A dense array cut into a grid of equally shaped, zero-padded blocks.

    `blocks` has shape `block_grid + block_shape`: the leading axes index
    the block, the trailing axes index the element within the block.
    """

    block_grid: tuple[int, ...]
    block_shape: tuple[int, ...]
    original_shape: tuple[int, ...]
    kind: FloatKind
    blocks: np.ndarray

    def __post_init__(self):
        grid = validate_shape(self.block_grid)
        bshape = validate_shape(self.block_shape)
        orig = validate_shape(self.original_shape)
        if not (len(grid) == len(bshape) == len(orig)):
            raise DimensionMismatch("grid, block and original shapes disagree on rank")
        if grid != grid_shape(orig, bshape):
            raise DimensionMismatch(
                f"grid {grid} is not ceil({orig} / {bshape})"
            )
        blocks = _frozen(self.blocks)
        if blocks.shape != grid + bshape:
            raise DimensionMismatch(
                f"block buffer shaped {blocks.shape}, expected {grid + bshape}"
            )
        object.__setattr__(self, "block_grid", grid)
        object.__setattr__(self, "block_shape", bshape)
        object.__setattr__(self, "original_shape", orig)
        object.__setattr__(self, "blocks", blocks)

    @property
    def ndim(self) -> int:
        return len(self.block_shape)

    @property
    def block_count(self) -> int:
        return int(np.prod(self.block_grid))


def convert_precision(a: DenseArray, kind: FloatKind) -> DenseArray:
    """Round every element of `a` to the nearest value of `kind`.

    Ties to even; values past the format's range become infinity and are
    propagated rather than rejected.
    """
    return DenseArray(a.shape, kind, round_to_kind(a.values, kind))


def block(a: DenseArray, block_shape) -> BlockedArray:
    """Cut `a` into a grid of `block_shape` blocks, zero-padding each axis.

    Block extents must be powers of two. An input shaped (3, 224, 224)
    with blocks (4, 4, 4) yields a (1, 56, 56) grid of (4, 4, 4) blocks.
    """
    bshape = validate_shape(block_shape)
    if len(bshape) != a.ndim:
        raise DimensionMismatch(
            f"block shape {bshape} has rank {len(bshape)}, array has rank {a.ndim}"
        )
    if not all(is_power_of_two(b) for b in bshape):
        raise NonPowerOfTwoBlock(f"block extents must be powers of two, got {bshape}")
    grid = grid_shape(a.shape, bshape)
    pad = [(0, g * b - s) for g, b, s in zip(grid, bshape, a.shape)]
    padded = np.pad(a.values, pad, mode="constant", constant_values=0.0)
    # interleave to (g1, b1, g2, b2, ...) then gather grid axes in front
    interleaved = padded.reshape(
        tuple(x for g, b in zip(grid, bshape) for x in (g, b))
    )
    order = tuple(range(0, 2 * a.ndim, 2)) + tuple(range(1, 2 * a.ndim, 2))
    blocks = np.transpose(interleaved, order)
    return BlockedArray(grid, bshape, a.shape, a.kind, blocks)


def unblock(b: BlockedArray) -> DenseArray:
    """Merge blocks and crop padding; exact inverse of :func:`block`."""
    d = b.ndim
    order = tuple(x for k in range(d) for x in (k, k + d))
    interleaved = np.transpose(b.blocks, order)
    padded = interleaved.reshape(
        tuple(g * s for g, s in zip(b.block_grid, b.block_shape))
    )
    crop = tuple(slice(0, s) for s in b.original_shape)
    return DenseArray(b.original_shape, b.kind, padded[crop])


def gradient_array(shape, kind: FloatKind = FloatKind.F64) -> DenseArray:
    """Array of values from 0 to 1 rising evenly from the lowest index.

    The element at index x is sum(x) / sum(shape - 1) (zero-based), so
    opposite corners hold exactly 0 and 1.
    """
    dims = validate_shape(shape)
    denom = sum(d - 1 for d in dims)
    if denom == 0:
        raise DegenerateShape(f"gradient over {dims} needs an extent > 1")
    total = np.zeros(dims, dtype=np.float64)
    for axis, d in enumerate(dims):
        idx = [1] * len(dims)
        idx[axis] = d
        total = total + np.arange(d, dtype=np.float64).reshape(idx)
    return DenseArray.of(total / denom, kind)
