"""Command-line front end.

Subcommands: `compress`, `decompress`, `op`, `compare`, `timeseries-diff`
and `info`. Uncompressed arrays travel as `.bza` container files (see
:mod:`bzc.arrayfile`), compressed arrays as `.bzc` bitstreams. Scalars
print with 17 significant digits so outputs are diffable and round-trip
exactly. The environment variable ``BLAZ_THREADS`` caps the worker pool
used for independent per-pair work in `timeseries-diff`; results are
identical at any thread count.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ops
from .arrayfile import read_array_file, write_array_file
from .codec import CodecSettings, CompressedArray, PruningMask, compress, decompress
from .errors import BzcError
from .format import bitstream_layout, deserialize, serialize
from .kinds import FloatKind, IndexKind
from .metrics import (
    compare_against_oracle,
    compression_ratio,
    measured_ratio,
    render_records,
    render_table,
)
from .transforms import TransformFamily

__all__ = ["main"]

_SCALAR_FMT = ".17g"


def _fmt(x: float) -> str:
    return format(float(x), _SCALAR_FMT)


def _parse_extents(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise BzcError(f"cannot parse extents from {text!r}") from None


def _parse_mask(source: str, block_shape: tuple[int, ...]) -> PruningMask:
    if source == "full":
        return PruningMask.full(block_shape)
    if source.startswith("first:"):
        try:
            k = int(source.split(":", 1)[1])
        except ValueError:
            raise BzcError(f"cannot parse kept count from {source!r}") from None
        return PruningMask.first_k(block_shape, k)
    try:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise BzcError(f"cannot read mask file {source!r}: {exc}") from None
    chars = [ch for ch in text if not ch.isspace()]
    if not all(ch in "01" for ch in chars):
        raise BzcError(f"mask file {source!r} must contain only 0/1 and whitespace")
    bits = np.array([ch == "1" for ch in chars], dtype=bool)
    return PruningMask.from_bits(block_shape, bits)


def _settings_from(args) -> CodecSettings:
    block_shape = _parse_extents(args.block)
    return CodecSettings(
        block_shape=block_shape,
        float_kind=FloatKind.parse(args.float),
        index_kind=IndexKind.parse(args.index),
        transform=TransformFamily.parse(args.transform),
        mask=_parse_mask(args.mask, block_shape),
    )


def _add_settings_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--block", required=True, metavar="E1,E2,...",
                        help="block shape; extents must be powers of two")
    parser.add_argument("--float", default="f32",
                        choices=[k.value for k in FloatKind],
                        help="floating-point kind for stored maxima (default f32)")
    parser.add_argument("--index", default="i16",
                        choices=[k.value for k in IndexKind],
                        help="bin index kind (default i16)")
    parser.add_argument("--transform", default="dct", choices=["dct", "haar"],
                        help="orthonormal transform family (default dct)")
    parser.add_argument("--mask", default="full", metavar="full|first:K|FILE",
                        help="pruning mask: 'full', 'first:K', or a file of "
                             "0/1 characters, one per intrablock position")


def _ssim_params(args) -> ops.SsimParams:
    weights = {}
    if args.ssim_weights:
        wl, wc, ws = (float(w) for w in args.ssim_weights.split(","))
        weights = {"luminance_weight": wl, "contrast_weight": wc,
                   "structure_weight": ws}
    return ops.SsimParams.for_data_range(args.data_range, **weights)


def _read_compressed(path) -> CompressedArray:
    try:
        with open(path, "rb") as fh:
            return deserialize(fh.read())
    except OSError as exc:
        raise BzcError(f"cannot read {path!r}: {exc}") from None


def _write_compressed(path, a: CompressedArray) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(a))


def cmd_compress(args) -> int:
    source = read_array_file(args.input)
    settings = _settings_from(args)
    compressed = compress(source, settings)
    stream = serialize(compressed)
    with open(args.output, "wb") as fh:
        fh.write(stream)
    closed = compression_ratio(source.kind.bits, settings, source.shape)
    measured = measured_ratio(source.kind.bits, source.shape, len(stream))
    print(f"closed-form ratio: {_fmt(closed)}")
    print(f"measured ratio: {_fmt(measured)}")
    return 0


def cmd_decompress(args) -> int:
    compressed = _read_compressed(args.input)
    write_array_file(args.output, decompress(compressed))
    return 0


def cmd_op(args) -> int:
    operands = [_read_compressed(path) for path in args.operands]

    def need(n: int):
        if len(operands) != n:
            raise BzcError(f"{args.name} takes {n} operand(s), got {len(operands)}")

    scalar_ops = {
        "dot": (2, lambda: ops.dot(*operands)),
        "mean": (1, lambda: ops.mean(operands[0],
                                     padding_corrected=args.padding_corrected)),
        "covariance": (2, lambda: ops.covariance(*operands)),
        "variance": (1, lambda: ops.variance(operands[0])),
        "l2_norm": (1, lambda: ops.l2_norm(operands[0])),
        "cosine_similarity": (2, lambda: ops.cosine_similarity(*operands)),
        "ssim": (2, lambda: ops.ssim(*operands, _ssim_params(args))),
        "wasserstein": (2, lambda: ops.approx_wasserstein(
            *operands, ops.WassersteinParams(order=args.p))),
    }
    array_ops = {
        "negate": (1, lambda: ops.negate(operands[0])),
        "add": (2, lambda: ops.add(*operands)),
        "add_scalar": (1, lambda: ops.add_scalar(operands[0], _require_x(args))),
        "mul_scalar": (1, lambda: ops.mul_scalar(operands[0], _require_x(args))),
    }
    if args.name in scalar_ops:
        arity, run = scalar_ops[args.name]
        need(arity)
        print(_fmt(run()))
        return 0
    if args.name in array_ops:
        arity, run = array_ops[args.name]
        need(arity)
        if not args.output:
            raise BzcError(f"{args.name} produces an array; pass -o OUTPUT.bzc")
        _write_compressed(args.output, run())
        return 0
    raise BzcError(f"unknown operation {args.name!r}")


def _require_x(args) -> float:
    if args.x is None:
        raise BzcError(f"{args.name} needs a scalar; pass -x VALUE")
    return args.x


def cmd_compare(args) -> int:
    operands = [read_array_file(path) for path in args.operands]
    settings = _settings_from(args)
    report = compare_against_oracle(
        args.name,
        operands,
        settings,
        x=args.x if args.x is not None else 0.0,
        wasserstein_params=ops.WassersteinParams(order=args.p),
        ssim_params=_ssim_params(args),
    )
    renderer = render_records if args.format == "records" else render_table
    print(renderer([report]))
    return 0


def _snapshot_paths(manifest: str) -> list[str]:
    try:
        with open(manifest, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise BzcError(f"cannot read manifest {manifest!r}: {exc}") from None
    paths = [line for line in lines if line and not line.startswith("#")]
    if len(paths) < 2:
        raise BzcError("manifest must list at least two snapshots")
    return paths


def _thread_cap() -> int:
    raw = os.environ.get("BLAZ_THREADS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise BzcError(f"BLAZ_THREADS must be an integer, got {raw!r}") from None
    return max(cap, 1)


def cmd_timeseries_diff(args) -> int:
    paths = _snapshot_paths(args.manifest)
    settings = _settings_from(args)
    snapshots = []
    shape = None
    for path in paths:
        dense = read_array_file(path)
        if shape is None:
            shape = dense.shape
        elif dense.shape != shape:
            raise BzcError(
                f"snapshot {path!r} shaped {dense.shape}, expected {shape}"
            )
        snapshots.append(compress(dense, settings))

    if args.measure == "l2":
        def pair_distance(i):
            diff = ops.add(snapshots[i + 1], ops.negate(snapshots[i]))
            return ops.l2_norm(diff)
    else:
        params = ops.WassersteinParams(order=args.p)

        def pair_distance(i):
            return ops.approx_wasserstein(snapshots[i], snapshots[i + 1], params)

    pairs = range(len(snapshots) - 1)
    cap = _thread_cap()
    if cap > 1:
        with ThreadPoolExecutor(max_workers=cap) as pool:
            distances = list(pool.map(pair_distance, pairs))
    else:
        distances = [pair_distance(i) for i in pairs]
    for i, dist in zip(pairs, distances):
        print(f"{i}\t{i + 1}\t{_fmt(dist)}")
    return 0


def cmd_info(args) -> int:
    compressed = _read_compressed(args.input)
    layout = bitstream_layout(compressed)
    print("field            offset_bits  length_bits")
    for name, offset, length in layout.fields:
        print(f"{name:<16} {offset:>11}  {length:>11}")
    print(f"total bytes: {layout.total_bytes}")
    closed = compression_ratio(
        args.input_bits, compressed.settings, compressed.original_shape
    )
    print(f"closed-form ratio (u={args.input_bits}): {_fmt(closed)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bzc",
        description="Lossy array compressor with compressed-space operations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a .bza array into a .bzc stream")
    p.add_argument("input", help="input .bza array file")
    p.add_argument("output", help="output .bzc stream")
    _add_settings_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decompress a .bzc stream into a .bza array")
    p.add_argument("input", help="input .bzc stream")
    p.add_argument("output", help="output .bza array file (f64 elements)")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("op", help="run an operation on compressed arrays")
    p.add_argument("name", help="operation name (e.g. dot, mean, negate, add)")
    p.add_argument("operands", nargs="+", help="operand .bzc files")
    p.add_argument("-o", "--output", help="output .bzc for array-valued operations")
    p.add_argument("-x", type=float, default=None, help="scalar operand")
    p.add_argument("-p", type=float, default=1.0, help="Wasserstein order (>= 1)")
    p.add_argument("--data-range", type=float, default=1.0,
                   help="data range for SSIM stabilizers (default 1.0)")
    p.add_argument("--ssim-weights", default=None, metavar="WL,WC,WS",
                   help="SSIM term weights (default 1,1,1)")
    p.add_argument("--padding-corrected", action="store_true",
                   help="divide mean by the true element count (exact for "
                        "shapes not divisible by the block shape)")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("compare",
                       help="run an operation in compressed space and against "
                            "the uncompressed oracle, report the deviation")
    p.add_argument("name", help="operation name")
    p.add_argument("operands", nargs="+", help="operand .bza files")
    _add_settings_flags(p)
    p.add_argument("-x", type=float, default=None, help="scalar operand")
    p.add_argument("-p", type=float, default=1.0, help="Wasserstein order (>= 1)")
    p.add_argument("--data-range", type=float, default=1.0,
                   help="data range for SSIM stabilizers (default 1.0)")
    p.add_argument("--ssim-weights", default=None, metavar="WL,WC,WS",
                   help="SSIM term weights (default 1,1,1)")
    p.add_argument("--format", choices=["table", "records"], default="table")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("timeseries-diff",
                       help="distances between adjacent snapshots of a series")
    p.add_argument("manifest", help="text file listing one .bza snapshot per line")
    p.add_argument("--measure", choices=["l2", "wasserstein"], required=True)
    p.add_argument("-p", type=float, default=1.0, help="Wasserstein order (>= 1)")
    _add_settings_flags(p)
    p.set_defaults(func=cmd_timeseries_diff)

    p = sub.add_parser("info", help="print the layout and ratio of a .bzc stream")
    p.add_argument("input", help=".bzc stream")
    p.add_argument("--input-bits", type=int, default=64, choices=[16, 32, 64],
                   help="uncompressed element width for the ratio (default 64)")
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BzcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
