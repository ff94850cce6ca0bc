"""Compression pipeline and the compressed array form.

Compression runs five steps: precision conversion, blocking, orthonormal
transform, binning, pruning. The compressed form keeps, per block, the
largest-magnitude coefficient (the maximum N, stored in the chosen float
kind) and the kept coefficients quantized to integer bin indices in
[-r, r], where r is the index type radius. Decompression scales indices
back, inverse-transforms, merges blocks and crops.

Binning quantizes against the *stored* (kind-rounded) maxima so the
decompressor rescales with exactly the value the compressor divided by.
Decompression applies the per-block N/r scale after the inverse
transform; the transform is linear, so this equals scaling first, but it
keeps negation bit-exact and scalar scaling within a few ulps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import (
    BlockedArray,
    DenseArray,
    block,
    convert_precision,
    grid_shape,
    is_power_of_two,
    unblock,
    validate_shape,
)
from .errors import (
    DimensionMismatch,
    IndexRangeError,
    LengthMismatch,
    NonPowerOfTwoBlock,
)
from .kinds import (
    FloatKind,
    IndexKind,
    from_storage,
    pattern_dtype,
    storage_dtype,
    to_storage,
)
from .transforms import (
    TransformFamily,
    forward_transform,
    inverse_transform,
    transforms_for,
)

__all__ = [
    "PruningMask",
    "CodecSettings",
    "CompressedArray",
    "bin_coefficients",
    "prune_and_flatten",
    "unflatten",
    "compress",
    "specified_coefficients",
    "decompress",
]


@dataclass(frozen=True)
class PruningMask:
    """Boolean keep/drop pattern over the intrablock index space."""

    shape: tuple[int, ...]
    bits: np.ndarray

    def __post_init__(self):
        shape = validate_shape(self.shape)
        bits = np.array(self.bits, dtype=bool, copy=True, order="C")
        if bits.shape != shape:
            raise DimensionMismatch(
                f"mask bits shaped {bits.shape} do not match mask shape {shape}"
            )
        bits.flags.writeable = False
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "bits", bits)

    @property
    def kept_count(self) -> int:
        return int(self.bits.sum())

    @property
    def flat_kept(self) -> np.ndarray:
        """Row-major flat positions of kept indices, in order."""
        return np.flatnonzero(self.bits.ravel())

    @property
    def keeps_first(self) -> bool:
        return bool(self.bits.ravel()[0])

    @classmethod
    def full(cls, shape) -> "PruningMask":
        shape = validate_shape(shape)
        return cls(shape, np.ones(shape, dtype=bool))

    @classmethod
    def first_k(cls, shape, k: int) -> "PruningMask":
        """Keep the k lowest row-major intrablock positions."""
        shape = validate_shape(shape)
        n = int(np.prod(shape))
        if not 0 <= k <= n:
            raise ValueError(f"kept count {k} outside [0, {n}]")
        bits = np.zeros(n, dtype=bool)
        bits[:k] = True
        return cls(shape, bits.reshape(shape))

    @classmethod
    def from_bits(cls, shape, bits) -> "PruningMask":
        shape = validate_shape(shape)
        flat = np.asarray(bits, dtype=bool).ravel()
        if flat.size != int(np.prod(shape)):
            raise LengthMismatch(
                f"{flat.size} mask bits for block shape {shape}"
            )
        return cls(shape, flat.reshape(shape))

    def __eq__(self, other):
        if not isinstance(other, PruningMask):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.shape, self.bits.tobytes()))


@dataclass(frozen=True)
class CodecSettings:
    """Everything that determines the compressed layout (and thus the ratio)."""

    block_shape: tuple[int, ...]
    float_kind: FloatKind = FloatKind.F32
    index_kind: IndexKind = IndexKind.I16
    transform: TransformFamily = TransformFamily.DCT
    mask: PruningMask | None = None

    def __post_init__(self):
        bshape = validate_shape(self.block_shape)
        if not all(is_power_of_two(b) for b in bshape):
            raise NonPowerOfTwoBlock(
                f"block extents must be powers of two, got {bshape}"
            )
        mask = self.mask if self.mask is not None else PruningMask.full(bshape)
        if mask.shape != bshape:
            raise DimensionMismatch(
                f"mask shaped {mask.shape} does not match block shape {bshape}"
            )
        object.__setattr__(self, "block_shape", bshape)
        object.__setattr__(self, "mask", mask)

    @property
    def ndim(self) -> int:
        return len(self.block_shape)

    @property
    def block_size(self) -> int:
        return int(np.prod(self.block_shape))

    @property
    def block_mean_scale(self) -> float:
        """Scale between a block's mean and its first coefficient: prod(i)**0.5."""
        return float(np.sqrt(self.block_size))

    def grid_for(self, shape) -> tuple[int, ...]:
        shape = validate_shape(shape)
        if len(shape) != self.ndim:
            raise DimensionMismatch(
                f"settings are {self.ndim}-dimensional, array shape {shape} is not"
            )
        return grid_shape(shape, self.block_shape)

    def matrices(self):
        return transforms_for(self.block_shape, self.transform)


@dataclass(frozen=True, eq=False)
class CompressedArray:
    """The compressed form: shapes, settings, per-block maxima and indices.

    `maxima` is stored in the float kind's native dtype, shaped like the
    block grid. `indices` holds each block's kept bin indices flattened in
    row-major intrablock order, shaped grid + (kept_count,). Equality is
    bit-exact, comparing maxima as raw bit patterns.
    """

    original_shape: tuple[int, ...]
    settings: CodecSettings
    maxima: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        shape = validate_shape(self.original_shape)
        grid = self.settings.grid_for(shape)
        maxima = np.array(
            self.maxima, dtype=storage_dtype(self.settings.float_kind), copy=True
        )
        if maxima.shape != grid:
            raise DimensionMismatch(
                f"maxima shaped {maxima.shape}, expected block grid {grid}"
            )
        idx_dtype = self.settings.index_kind.dtype
        indices = np.array(self.indices, dtype=idx_dtype, copy=True, order="C")
        expected = grid + (self.settings.mask.kept_count,)
        if indices.shape != expected:
            raise DimensionMismatch(
                f"indices shaped {indices.shape}, expected {expected}"
            )
        r = self.settings.index_kind.radius
        if indices.size and int(indices.min()) < -r:
            raise IndexRangeError(
                f"bin index {int(indices.min())} below -{r}"
            )
        maxima.flags.writeable = False
        indices.flags.writeable = False
        object.__setattr__(self, "original_shape", shape)
        object.__setattr__(self, "maxima", maxima)
        object.__setattr__(self, "indices", indices)

    @property
    def block_grid(self) -> tuple[int, ...]:
        return self.settings.grid_for(self.original_shape)

    @property
    def block_count(self) -> int:
        return int(np.prod(self.block_grid))

    def maxima_f64(self) -> np.ndarray:
        return from_storage(self.maxima)

    def maxima_bits(self) -> np.ndarray:
        """Raw bit patterns of the stored maxima."""
        return self.maxima.view(pattern_dtype(self.settings.float_kind))

    def __eq__(self, other):
        if not isinstance(other, CompressedArray):
            return NotImplemented
        return (
            self.original_shape == other.original_shape
            and self.settings == other.settings
            and np.array_equal(self.maxima_bits(), other.maxima_bits())
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = object.__hash__


def bin_coefficients(
    c: BlockedArray,
    index_kind: IndexKind,
    float_kind: FloatKind = FloatKind.F64,
) -> tuple[np.ndarray, np.ndarray]:
    """Quantize coefficient blocks to integer indices in [-r, r].

    Returns (maxima, indices): maxima is each block's largest-magnitude
    coefficient rounded into `float_kind` (native dtype, shaped like the
    grid); indices are round(r * C / N) per block in the index dtype,
    shaped grid + block shape. Blocks whose maximum is zero get all-zero
    indices.
    """
    d = c.ndim
    blocks = c.blocks
    block_axes = tuple(range(d, 2 * d))
    norms = np.max(np.abs(blocks), axis=block_axes)
    maxima = to_storage(norms, float_kind)
    scale = from_storage(maxima)
    with np.errstate(all="ignore"):
        q = blocks / scale.reshape(scale.shape + (1,) * d)
    q[~np.isfinite(q)] = 0.0  # zero-maximum blocks quantize to zero
    r = index_kind.radius
    bound = index_kind.clamp_bound
    scaled = np.clip(np.rint(q * float(r)), -bound, bound)
    return maxima, scaled.astype(index_kind.dtype)


def prune_and_flatten(indices: np.ndarray, mask: PruningMask) -> np.ndarray:
    """Keep masked positions of per-block indices, flattened row-major.

    `indices` is shaped grid + block shape; the result is shaped
    grid + (kept_count,).
    """
    d = len(mask.shape)
    if indices.shape[-d:] != mask.shape:
        raise DimensionMismatch(
            f"index blocks shaped {indices.shape[-d:]}, mask {mask.shape}"
        )
    grid = indices.shape[:-d]
    size = int(np.prod(mask.shape))
    if mask.kept_count == size:
        return indices.reshape(grid + (size,))
    flat = indices.reshape(grid + (-1,))
    return flat[..., mask.flat_kept]


def unflatten(flat: np.ndarray, mask: PruningMask) -> np.ndarray:
    """Inverse of :func:`prune_and_flatten`; dropped positions become zero.

    With a full mask the result is a reshaped view of the input.
    """
    if flat.shape[-1] != mask.kept_count:
        raise LengthMismatch(
            f"{flat.shape[-1]} indices per block, mask keeps {mask.kept_count}"
        )
    grid = flat.shape[:-1]
    size = int(np.prod(mask.shape))
    if mask.kept_count == size:
        return flat.reshape(grid + mask.shape)
    # scatter with the kept axis leading: contiguous row copies, then a
    # single strided transpose instead of a slow per-element gather
    rows = int(np.prod(grid)) if grid else 1
    out = np.zeros((size, rows), dtype=flat.dtype)
    out[mask.flat_kept, :] = flat.reshape(rows, mask.kept_count).T
    return np.ascontiguousarray(out.T).reshape(grid + mask.shape)


def compress(a: DenseArray, settings: CodecSettings) -> CompressedArray:
    """convert -> block -> transform -> bin -> prune, into a CompressedArray."""
    if a.ndim != settings.ndim:
        raise DimensionMismatch(
            f"settings are {settings.ndim}-dimensional, array is {a.ndim}-dimensional"
        )
    lowered = convert_precision(a, settings.float_kind)
    blocked = block(lowered, settings.block_shape)
    coeffs = forward_transform(blocked, settings.matrices())
    maxima, indices = bin_coefficients(
        coeffs, settings.index_kind, settings.float_kind
    )
    flat = prune_and_flatten(indices, settings.mask)
    return CompressedArray(a.shape, settings, maxima, flat)


def _coefficient_blocks(a: CompressedArray) -> np.ndarray:
    """Specified coefficients N * F / r as float64, shaped grid + block shape.

    Multiplying by N before dividing by r keeps extreme indices exact:
    a coefficient that binned to +-r reconstructs to exactly +-N whenever
    N * r is representable.
    """
    settings = a.settings
    d = settings.ndim
    out = unflatten(a.indices, settings.mask).astype(np.float64)
    n = a.maxima_f64().reshape(a.maxima.shape + (1,) * d)
    out *= n
    out /= float(settings.index_kind.radius)
    return out


def specified_coefficients(a: CompressedArray) -> BlockedArray:
    """Reconstruct the kept coefficients; pruned positions are zero."""
    return BlockedArray(
        a.block_grid,
        a.settings.block_shape,
        a.original_shape,
        a.settings.float_kind,
        _coefficient_blocks(a),
    )


def decompress(a: CompressedArray) -> DenseArray:
    """Rescale, inverse-transform, merge and crop back to a dense array.

    Output values are float64 (the element kind is widened to F64).
    """
    settings = a.settings
    d = settings.ndim
    full = unflatten(a.indices, settings.mask).astype(np.float64)
    full.flags.writeable = False
    ints = BlockedArray(
        a.block_grid, settings.block_shape, a.original_shape, FloatKind.F64, full
    )
    unscaled = inverse_transform(ints, settings.matrices())
    n = a.maxima_f64().reshape(a.maxima.shape + (1,) * d)
    blocks = unscaled.blocks * n
    blocks /= float(settings.index_kind.radius)
    blocks.flags.writeable = False
    rebuilt = BlockedArray(
        a.block_grid, settings.block_shape, a.original_shape, FloatKind.F64, blocks
    )
    return unblock(rebuilt)
