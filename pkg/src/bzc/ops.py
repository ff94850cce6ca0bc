"""Operations computed directly on compressed arrays.

Every function here works from the compressed form {shape, settings,
maxima, indices} without reconstructing the original array. Negation and
scalar multiplication touch only stored fields and add no error; addition
and scalar addition re-quantize against the changed per-block maxima
(rebinning) and that requantization is their only extra error; the scalar
reductions (dot, mean, covariance, variance, norm, cosine similarity,
structural similarity) rely on the transform preserving dot products and
match their uncompressed counterparts up to float rounding.

The approximate Wasserstein distance compares the two arrays' block-mean
distributions, so its error shrinks with block size; one-element blocks
make it exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import BlockedArray
from .codec import (
    CompressedArray,
    _coefficient_blocks,
    bin_coefficients,
    prune_and_flatten,
)
from .errors import (
    MaskExcludesMeanCoefficient,
    NegativeBaseWithFractionalWeight,
    SettingsMismatch,
    ZeroNormOperand,
)
from .kinds import FloatKind, to_storage

__all__ = [
    "SsimParams",
    "WassersteinParams",
    "negate",
    "add",
    "add_scalar",
    "mul_scalar",
    "dot",
    "mean",
    "covariance",
    "variance",
    "l2_norm",
    "cosine_similarity",
    "ssim",
    "ssim_components",
    "block_means",
    "approx_wasserstein",
]


@dataclass(frozen=True)
class SsimParams:
    """Stabilizers and weights for the structural similarity index.

    Defaults follow the usual (0.01*L)**2 / (0.03*L)**2 stabilizers at
    data range L=1 with unit weights; use :meth:`for_data_range` for
    other ranges.
    """

    luminance_stabilizer: float = 1e-4
    contrast_stabilizer: float = 9e-4
    luminance_weight: float = 1.0
    contrast_weight: float = 1.0
    structure_weight: float = 1.0

    def __post_init__(self):
        if self.luminance_stabilizer < 0 or self.contrast_stabilizer < 0:
            raise ValueError("stabilizers must be non-negative")

    @classmethod
    def for_data_range(cls, data_range: float, **weights) -> "SsimParams":
        return cls(
            luminance_stabilizer=(0.01 * data_range) ** 2,
            contrast_stabilizer=(0.03 * data_range) ** 2,
            **weights,
        )


@dataclass(frozen=True)
class WassersteinParams:
    """Order and normalization tolerance for the approximate distance."""

    order: float = 1.0
    normalization_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.order >= 1.0:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.normalization_tolerance < 0:
            raise ValueError("normalization tolerance must be non-negative")


def _check_compatible(a: CompressedArray, b: CompressedArray, *, index_kind=False):
    problems = []
    if a.original_shape != b.original_shape:
        problems.append(f"shape {a.original_shape} vs {b.original_shape}")
    sa, sb = a.settings, b.settings
    if sa.block_shape != sb.block_shape:
        problems.append(f"block shape {sa.block_shape} vs {sb.block_shape}")
    if sa.mask != sb.mask:
        problems.append("pruning masks differ")
    if sa.transform is not sb.transform:
        problems.append(f"transform {sa.transform.value} vs {sb.transform.value}")
    if index_kind and sa.index_kind is not sb.index_kind:
        problems.append(
            f"index kind {sa.index_kind.value} vs {sb.index_kind.value}"
        )
    if problems:
        raise SettingsMismatch("; ".join(problems))


def _require_first_coefficient(a: CompressedArray):
    if not a.settings.mask.keeps_first:
        raise MaskExcludesMeanCoefficient(
            "operation needs the first (block-mean) coefficient, "
            "but the pruning mask drops it"
        )


def _first_slice(d: int):
    return (Ellipsis,) + (0,) * d


# Scalar reductions never materialize the full coefficient volume: they
# stream the kept indices (pruned positions contribute nothing) in fixed
# ~4 MiB chunks, which keeps per-call allocations small and the reduction
# order deterministic. Chunks carry N*F; the index radius divides the
# accumulated total once at the end.
_CHUNK_FLOATS = 1 << 19


def _chunk_rows(a: CompressedArray) -> int:
    kept = max(a.settings.mask.kept_count, 1)
    return max(1, _CHUNK_FLOATS // kept)


def _unscaled_chunks(a: CompressedArray, rows: int):
    """Yield chunks of N*F (radius not yet divided out), shaped (rows, kept).

    One workspace is reused for every chunk, so a full pass allocates a
    constant amount regardless of array size; consumers must finish with a
    chunk before advancing the generator. Yields nothing when the mask
    keeps no positions (every coefficient is an implicit zero).
    """
    kept = a.settings.mask.kept_count
    if kept == 0:
        return
    flat = a.indices.reshape(-1, kept)
    n = a.maxima_f64().ravel()
    workspace = np.empty((min(rows, flat.shape[0]), kept), dtype=np.float64)
    for start in range(0, flat.shape[0], rows):
        stop = min(start + rows, flat.shape[0])
        out = workspace[: stop - start]
        # one fused pass: int indices widen to float64 inside the multiply
        np.multiply(flat[start:stop], n[start:stop, None], out=out)
        yield out


def _first_coefficients(a: CompressedArray) -> np.ndarray:
    """Each block's first coefficient N*F[0]/r; needs a first-keeping mask.

    The first kept column is intrablock position 0 whenever the mask keeps
    it, so this touches O(block count) data, not the whole volume.
    """
    firsts = a.indices[..., 0].astype(np.float64).ravel()
    firsts *= a.maxima_f64().ravel()
    firsts /= float(a.settings.index_kind.radius)
    return firsts


def _rebin(a: CompressedArray, coeffs: np.ndarray) -> CompressedArray:
    settings = a.settings
    coeffs.flags.writeable = False
    blocked = BlockedArray(
        a.block_grid,
        settings.block_shape,
        a.original_shape,
        FloatKind.F64,
        coeffs,
    )
    maxima, indices = bin_coefficients(
        blocked, settings.index_kind, settings.float_kind
    )
    flat = prune_and_flatten(indices, settings.mask)
    return CompressedArray(a.original_shape, settings, maxima, flat)


def negate(a: CompressedArray) -> CompressedArray:
    """Negate without error: indices flip sign, maxima stay."""
    return CompressedArray(a.original_shape, a.settings, a.maxima, -a.indices)


def add(a: CompressedArray, b: CompressedArray) -> CompressedArray:
    """Element-wise sum; the only new error is rebinning."""
    _check_compatible(a, b, index_kind=True)
    coeffs = _coefficient_blocks(a) + _coefficient_blocks(b)
    return _rebin(a, coeffs)


def add_scalar(a: CompressedArray, x: float) -> CompressedArray:
    """Add x to every element by shifting each block's first coefficient.

    Maxima are recomputed after the shift so indices stay in [-r, r].
    """
    _require_first_coefficient(a)
    coeffs = _coefficient_blocks(a)
    coeffs[_first_slice(a.settings.ndim)] += float(x) * a.settings.block_mean_scale
    return _rebin(a, coeffs)


def mul_scalar(a: CompressedArray, x: float) -> CompressedArray:
    """Scale by x without rebinning: maxima absorb |x|, indices the sign."""
    x = float(x)
    maxima = to_storage(a.maxima_f64() * abs(x), a.settings.float_kind)
    sign = 1 if x > 0 else (-1 if x < 0 else 0)
    return CompressedArray(a.original_shape, a.settings, maxima, a.indices * sign)


def dot(a: CompressedArray, b: CompressedArray) -> float:
    """Dot product of the underlying arrays (padding contributes zeros)."""
    _check_compatible(a, b)
    rows = _chunk_rows(a)
    total = 0.0
    if a is b:
        # self dot: one stream; chunk values are identical either way
        for c in _unscaled_chunks(a, rows):
            flat = c.ravel()
            total += float(np.dot(flat, flat))
    else:
        for c1, c2 in zip(_unscaled_chunks(a, rows), _unscaled_chunks(b, rows)):
            total += float(np.dot(c1.ravel(), c2.ravel()))
    return total / (
        float(a.settings.index_kind.radius) * float(b.settings.index_kind.radius)
    )


def mean(a: CompressedArray, padding_corrected: bool = False) -> float:
    """Mean of the array from the first coefficient of every block.

    The plain form averages over whole blocks and is exact only when the
    shape divides evenly by the block shape; with `padding_corrected` the
    sum (to which padding contributes nothing) is divided by the true
    element count, which is exact for any shape.
    """
    _require_first_coefficient(a)
    firsts = _first_coefficients(a)
    c = a.settings.block_mean_scale
    if padding_corrected:
        return float(c * np.sum(firsts) / np.prod(a.original_shape))
    return float(np.mean(firsts) / c)


def covariance(a: CompressedArray, b: CompressedArray) -> float:
    """Population covariance over the padded element count."""
    _check_compatible(a, b)
    _require_first_coefficient(a)
    _require_first_coefficient(b)
    blocks = a.block_count
    ra = float(a.settings.index_kind.radius)
    rb = float(b.settings.index_kind.radius)
    # center the first (block-mean) coefficients in the N*F scale
    m1 = float(np.sum(_first_coefficients(a)) / blocks) * ra
    m2 = float(np.sum(_first_coefficients(b)) / blocks) * rb
    rows = _chunk_rows(a)
    total = 0.0
    if a is b:
        for c in _unscaled_chunks(a, rows):
            c[:, 0] -= m1
            flat = c.ravel()
            total += float(np.dot(flat, flat))
    else:
        for c1, c2 in zip(_unscaled_chunks(a, rows), _unscaled_chunks(b, rows)):
            c1[:, 0] -= m1
            c2[:, 0] -= m2
            total += float(np.dot(c1.ravel(), c2.ravel()))
    return total / (ra * rb) / (blocks * a.settings.block_size)


def variance(a: CompressedArray) -> float:
    """Variance of the array: its covariance with itself."""
    return covariance(a, a)


def l2_norm(a: CompressedArray) -> float:
    """Euclidean norm; equals the norm of the specified coefficients."""
    total = 0.0
    for c in _unscaled_chunks(a, _chunk_rows(a)):
        flat = c.ravel()
        total += float(np.dot(flat, flat))
    return float(np.sqrt(total)) / float(a.settings.index_kind.radius)


def cosine_similarity(a: CompressedArray, b: CompressedArray) -> float:
    _check_compatible(a, b)
    na = l2_norm(a)
    nb = l2_norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormOperand("cosine similarity needs two nonzero operands")
    return dot(a, b) / (na * nb)


def _signed_power(base: float, weight: float, term: str) -> float:
    if base < 0 and not float(weight).is_integer():
        raise NegativeBaseWithFractionalWeight(
            f"{term} term is negative ({base!r}) with non-integer weight {weight!r}"
        )
    return float(base) ** float(weight)


def ssim_components(
    a: CompressedArray, b: CompressedArray, params: SsimParams | None = None
) -> tuple[float, float, float]:
    """Luminance, contrast and structure terms of the similarity index."""
    params = params or SsimParams()
    _check_compatible(a, b)
    mu_a = mean(a)
    mu_b = mean(b)
    var_a = variance(a)
    var_b = variance(b)
    sd_a = np.sqrt(var_a)
    sd_b = np.sqrt(var_b)
    cov = covariance(a, b)
    sl = params.luminance_stabilizer
    sc = params.contrast_stabilizer
    lum = (2 * mu_a * mu_b + sl) / (mu_a * mu_a + mu_b * mu_b + sl)
    con = (2 * sd_a * sd_b + sc) / (var_a + var_b + sc)
    struct = (cov + sc / 2) / (sd_a * sd_b + sc / 2)
    return float(lum), float(con), float(struct)


def ssim(
    a: CompressedArray, b: CompressedArray, params: SsimParams | None = None
) -> float:
    """Structural similarity: weighted product of the three terms."""
    params = params or SsimParams()
    lum, con, struct = ssim_components(a, b, params)
    return (
        _signed_power(lum, params.luminance_weight, "luminance")
        * _signed_power(con, params.contrast_weight, "contrast")
        * _signed_power(struct, params.structure_weight, "structure")
    )


def _softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / np.sum(z)


def block_means(a: CompressedArray) -> np.ndarray:
    """Per-block means, flattened in row-major grid order."""
    _require_first_coefficient(a)
    return _first_coefficients(a) / a.settings.block_mean_scale


def approx_wasserstein(
    a: CompressedArray,
    b: CompressedArray,
    params: WassersteinParams | None = None,
) -> float:
    """Order-p distance between the sorted block-mean distributions.

    Block means not summing to 1 (beyond the normalization tolerance) are
    pushed through a softmax first. With one-element blocks the block
    means are the elements themselves and the result is exact.
    """
    params = params or WassersteinParams()
    _check_compatible(a, b)
    pa = block_means(a)
    pb = block_means(b)
    tol = params.normalization_tolerance
    if abs(np.sum(pa) - 1.0) > tol:
        pa = _softmax(pa)
    if abs(np.sum(pb) - 1.0) > tol:
        pb = _softmax(pb)
    diffs = np.abs(np.sort(pa) - np.sort(pb))
    p = float(params.order)
    return float((np.sum(diffs**p) / diffs.size) ** (1.0 / p))
