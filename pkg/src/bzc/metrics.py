"""Compression-ratio accounting, error predictors, and the oracle harness.

The compression ratio is a closed-form function of the settings alone;
data never changes it. Error predictors report, per block, the binning
half-width N/(2r+1), the loose worst-case element bound |C|_inf * prod(i),
and the exact coefficient-error norm (which, by orthonormality, equals
the block's element-space L2 error up to float rounding).

The oracle harness runs one operation twice, once in compressed space and
once conventionally on the decompressed operands, and reports the
deviation. It exists to validate that the "no additional error"
operations really do match their uncompressed counterparts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .arrays import BlockedArray, DenseArray, block, convert_precision
from .codec import (
    CodecSettings,
    CompressedArray,
    compress,
    decompress,
    specified_coefficients,
)
from .errors import UnknownOperation
from .kinds import FloatKind
from .transforms import forward_transform

__all__ = [
    "compression_ratio",
    "measured_ratio",
    "RatioReport",
    "ratio_report",
    "ErrorReport",
    "predict_error_bounds",
    "measure_roundtrip",
    "OpComparison",
    "compare_against_oracle",
    "ORACLE_OPERATIONS",
    "render_table",
    "render_records",
]

_RELATIVE_FLOOR = 1e-12


def compression_ratio(u_bits: int, settings: CodecSettings, shape) -> float:
    """Asymptotic ratio u*prod(s) / ((f + i*sum(P)) * prod(ceil(s/i)))."""
    if u_bits not in (16, 32, 64):
        raise ValueError(f"uncompressed element width must be 16, 32 or 64, got {u_bits}")
    grid = settings.grid_for(shape)
    blocks = math.prod(grid)
    per_block = settings.float_kind.bits + settings.index_kind.bits * settings.mask.kept_count
    return u_bits * math.prod(tuple(shape)) / (per_block * blocks)


def measured_ratio(u_bits: int, shape, stream_bytes: int) -> float:
    """Input bits divided by actual serialized bits."""
    return u_bits * math.prod(tuple(shape)) / (8 * stream_bytes)


@dataclass(frozen=True)
class RatioReport:
    closed_form: float
    measured: float
    u_bits: int
    shape: tuple[int, ...]
    settings: CodecSettings


def ratio_report(
    u_bits: int, settings: CodecSettings, shape, stream_bytes: int
) -> RatioReport:
    return RatioReport(
        closed_form=compression_ratio(u_bits, settings, shape),
        measured=measured_ratio(u_bits, shape, stream_bytes),
        u_bits=u_bits,
        shape=tuple(shape),
        settings=settings,
    )


@dataclass(frozen=True)
class ErrorReport:
    """Per-block predicted bounds, plus observed errors when measured.

    `per_block_bin_bound` is the classic binning figure N/(2r+1); the
    quantizer's attainable worst case is N/(2r), half the spacing of its
    reconstruction levels. `per_block_l2_coeff_error` is exact (it is
    computed from the true coefficients) and bounds the block's
    element-space L2 error up to transform rounding.
    """

    per_block_bin_bound: np.ndarray
    per_block_loose_linf: np.ndarray
    per_block_l2_coeff_error: np.ndarray
    observed_linf: float | None = None
    observed_l2: float | None = None
    per_block_observed_l2: np.ndarray | None = None


def predict_error_bounds(
    a: CompressedArray, original_coefficients: BlockedArray
) -> ErrorReport:
    """Bounds for one compressed array given the coefficients it came from."""
    settings = a.settings
    d = settings.ndim
    block_axes = tuple(range(d, 2 * d))
    coeffs = original_coefficients.blocks
    approx = specified_coefficients(a).blocks
    radius = settings.index_kind.radius
    norms = np.max(np.abs(coeffs), axis=block_axes)
    coeff_err = np.sqrt(np.sum((approx - coeffs) ** 2, axis=block_axes))
    return ErrorReport(
        per_block_bin_bound=a.maxima_f64() / (2 * radius + 1),
        per_block_loose_linf=norms * settings.block_size,
        per_block_l2_coeff_error=coeff_err,
    )


def measure_roundtrip(original: DenseArray, settings: CodecSettings) -> ErrorReport:
    """Compress, decompress, and fill in observed round-trip errors."""
    compressed = compress(original, settings)
    lowered = convert_precision(original, settings.float_kind)
    blocked = block(lowered, settings.block_shape)
    coeffs = forward_transform(blocked, settings.matrices())
    report = predict_error_bounds(compressed, coeffs)

    d = settings.ndim
    block_axes = tuple(range(d, 2 * d))
    rebuilt = block(decompress(compressed), settings.block_shape)
    diff = rebuilt.blocks - blocked.blocks
    per_block_l2 = np.sqrt(np.sum(diff**2, axis=block_axes))
    return ErrorReport(
        per_block_bin_bound=report.per_block_bin_bound,
        per_block_loose_linf=report.per_block_loose_linf,
        per_block_l2_coeff_error=report.per_block_l2_coeff_error,
        observed_linf=float(np.max(np.abs(diff))),
        observed_l2=float(np.sqrt(np.sum(diff**2))),
        per_block_observed_l2=per_block_l2,
    )


@dataclass(frozen=True)
class OpComparison:
    """One operation evaluated in compressed space and against its oracle."""

    name: str
    result_type: str  # "scalar" or "array"
    compressed: float | None
    oracle: float | None
    absolute_deviation: float
    relative_deviation: float
    bound: float | None = None
    note: str = ""


def _relative(dev: float, baseline: float) -> float:
    return dev / max(abs(baseline), _RELATIVE_FLOOR)


def _oracle_block_means(x: np.ndarray, settings: CodecSettings) -> np.ndarray:
    d = settings.ndim
    blocked = block(DenseArray(x.shape, FloatKind.F64, x), settings.block_shape)
    return blocked.blocks.mean(axis=tuple(range(d, 2 * d))).ravel()


def _oracle_wasserstein(
    x: np.ndarray, y: np.ndarray, settings: CodecSettings, params
) -> float:
    pa = _oracle_block_means(x, settings)
    pb = _oracle_block_means(y, settings)
    tol = params.normalization_tolerance
    if abs(pa.sum() - 1.0) > tol:
        e = np.exp(pa - pa.max())
        pa = e / e.sum()
    if abs(pb.sum() - 1.0) > tol:
        e = np.exp(pb - pb.max())
        pb = e / e.sum()
    diffs = np.abs(np.sort(pa) - np.sort(pb))
    p = params.order
    return float((np.sum(diffs**p) / diffs.size) ** (1.0 / p))


def _oracle_ssim(x: np.ndarray, y: np.ndarray, params) -> float:
    mx, my = x.mean(), y.mean()
    vx = np.mean((x - mx) ** 2)
    vy = np.mean((y - my) ** 2)
    cov = np.mean((x - mx) * (y - my))
    sl, sc = params.luminance_stabilizer, params.contrast_stabilizer
    lum = (2 * mx * my + sl) / (mx * mx + my * my + sl)
    con = (2 * np.sqrt(vx) * np.sqrt(vy) + sc) / (vx + vy + sc)
    struct = (cov + sc / 2) / (np.sqrt(vx) * np.sqrt(vy) + sc / 2)
    return float(
        lum**params.luminance_weight
        * con**params.contrast_weight
        * struct**params.structure_weight
    )


# name -> (arity, kind); kind is "scalar" or "array"
ORACLE_OPERATIONS = {
    "dot": (2, "scalar"),
    "mean": (1, "scalar"),
    "covariance": (2, "scalar"),
    "variance": (1, "scalar"),
    "l2_norm": (1, "scalar"),
    "cosine_similarity": (2, "scalar"),
    "ssim": (2, "scalar"),
    "wasserstein": (2, "scalar"),
    "negate": (1, "array"),
    "add": (2, "array"),
    "add_scalar": (1, "array"),
    "mul_scalar": (1, "array"),
}


def compare_against_oracle(
    op_name: str,
    operands,
    settings: CodecSettings,
    *,
    x: float = 0.0,
    wasserstein_params: ops.WassersteinParams | None = None,
    ssim_params: ops.SsimParams | None = None,
) -> OpComparison:
    """Run `op_name` in compressed space and on decompressed operands.

    `operands` are uncompressed dense arrays; they are compressed with
    `settings` here so both routes start from identical compressed forms.
    Scalar `x` feeds add_scalar/mul_scalar; the params objects feed
    wasserstein/ssim.
    """
    if op_name not in ORACLE_OPERATIONS:
        raise UnknownOperation(
            f"{op_name!r} is not one of {sorted(ORACLE_OPERATIONS)}"
        )
    arity, kind = ORACLE_OPERATIONS[op_name]
    if len(operands) != arity:
        raise ValueError(f"{op_name} takes {arity} operand(s), got {len(operands)}")

    compressed = [compress(a, settings) for a in operands]
    dec = [decompress(c).values for c in compressed]
    wparams = wasserstein_params or ops.WassersteinParams()
    sparams = ssim_params or ops.SsimParams()

    if kind == "scalar":
        if op_name == "dot":
            got = ops.dot(*compressed)
            want = float(np.dot(dec[0].ravel(), dec[1].ravel()))
        elif op_name == "mean":
            got = ops.mean(compressed[0])
            want = float(np.mean(dec[0]))
        elif op_name == "covariance":
            got = ops.covariance(*compressed)
            want = float(np.mean((dec[0] - dec[0].mean()) * (dec[1] - dec[1].mean())))
        elif op_name == "variance":
            got = ops.variance(compressed[0])
            want = float(np.mean((dec[0] - dec[0].mean()) ** 2))
        elif op_name == "l2_norm":
            got = ops.l2_norm(compressed[0])
            want = float(np.linalg.norm(dec[0].ravel()))
        elif op_name == "cosine_similarity":
            got = ops.cosine_similarity(*compressed)
            want = float(
                np.dot(dec[0].ravel(), dec[1].ravel())
                / (np.linalg.norm(dec[0]) * np.linalg.norm(dec[1]))
            )
        elif op_name == "ssim":
            got = ops.ssim(*compressed, sparams)
            want = _oracle_ssim(dec[0], dec[1], sparams)
        else:
            got = ops.approx_wasserstein(*compressed, wparams)
            want = _oracle_wasserstein(dec[0], dec[1], settings, wparams)
        dev = abs(got - want)
        return OpComparison(
            name=op_name,
            result_type="scalar",
            compressed=got,
            oracle=want,
            absolute_deviation=dev,
            relative_deviation=_relative(dev, want),
        )

    if op_name == "negate":
        result = ops.negate(compressed[0])
        want_arr = -dec[0]
        bound = None
        note = "exact"
    elif op_name == "add":
        result = ops.add(*compressed)
        want_arr = dec[0] + dec[1]
        bound = _rebinning_bound(result)
        note = "rebinning"
    elif op_name == "add_scalar":
        result = ops.add_scalar(compressed[0], x)
        want_arr = dec[0] + x
        bound = _rebinning_bound(result)
        note = "rebinning"
    else:
        result = ops.mul_scalar(compressed[0], x)
        want_arr = dec[0] * x
        bound = None
        note = "exact"
    got_arr = decompress(result).values
    dev = float(np.max(np.abs(got_arr - want_arr))) if want_arr.size else 0.0
    baseline = float(np.max(np.abs(want_arr))) if want_arr.size else 0.0
    return OpComparison(
        name=op_name,
        result_type="array",
        compressed=None,
        oracle=None,
        absolute_deviation=dev,
        relative_deviation=_relative(dev, baseline),
        bound=bound,
        note=note,
    )


def _rebinning_bound(result: CompressedArray) -> float:
    """Worst-case element error from requantizing: max N/(2r+1) * prod(i)."""
    radius = result.settings.index_kind.radius
    return float(
        np.max(result.maxima_f64()) / (2 * radius + 1) * result.settings.block_size
    )


def _format_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def render_table(comparisons) -> str:
    """Line-oriented text table, one row per comparison."""
    header = ("operation", "type", "compressed", "oracle",
              "abs_deviation", "rel_deviation", "bound", "note")
    rows = [header]
    for c in comparisons:
        rows.append((
            c.name,
            c.result_type,
            _format_value(c.compressed),
            _format_value(c.oracle),
            _format_value(c.absolute_deviation),
            _format_value(c.relative_deviation),
            _format_value(c.bound),
            c.note or "-",
        ))
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines)


def render_records(comparisons) -> str:
    """Machine-readable key=value records, blank-line separated."""
    blocks = []
    for c in comparisons:
        lines = [
            f"operation={c.name}",
            f"result_type={c.result_type}",
            f"compressed={_format_value(c.compressed)}",
            f"oracle={_format_value(c.oracle)}",
            f"absolute_deviation={_format_value(c.absolute_deviation)}",
            f"relative_deviation={_format_value(c.relative_deviation)}",
            f"bound={_format_value(c.bound)}",
            f"note={c.note}",
        ]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
