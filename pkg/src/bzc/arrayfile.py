"""Raw dense-array container (`.bza` files).

A minimal self-describing format so the CLI can move uncompressed arrays
around without depending on a scientific container library:

    magic "BZA1" | u8 dimensionality | u64-le extent per axis |
    u8 element-kind code | raw little-endian element payload

The payload holds each element's bit pattern at the kind's width (2, 4 or
8 bytes). To adapt external data, build a :class:`~bzc.arrays.DenseArray`
from any numpy array and write it:

    write_array_file(path, DenseArray.of(np.load("data.npy")))
"""

from __future__ import annotations

import struct

import numpy as np

from .arrays import DenseArray
from .errors import ArrayFileError
from .kinds import FloatKind, from_storage, pattern_dtype, storage_dtype, to_storage

__all__ = ["MAGIC", "write_array_file", "read_array_file"]

MAGIC = b"BZA1"


def write_array_file(path, a: DenseArray) -> None:
    header = MAGIC + struct.pack("<B", a.ndim)
    header += b"".join(struct.pack("<Q", d) for d in a.shape)
    header += struct.pack("<B", a.kind.code)
    stored = to_storage(a.values, a.kind)
    payload = stored.view(pattern_dtype(a.kind)).astype(
        pattern_dtype(a.kind).newbyteorder("<")
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_array_file(path) -> DenseArray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 5 or data[:4] != MAGIC:
        raise ArrayFileError(f"{path}: not an array file (bad magic)")
    ndim = data[4]
    pos = 5
    if ndim < 1:
        raise ArrayFileError(f"{path}: dimensionality must be >= 1")
    if len(data) < pos + 8 * ndim + 1:
        raise ArrayFileError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{ndim}Q", data, pos)
    pos += 8 * ndim
    if any(d == 0 for d in shape):
        raise ArrayFileError(f"{path}: zero extent in shape {shape}")
    code = data[pos]
    pos += 1
    try:
        kind = FloatKind.from_code(code)
    except KeyError:
        raise ArrayFileError(f"{path}: unknown element kind code {code}") from None
    count = int(np.prod(shape))
    expected = count * kind.bits // 8
    if len(data) - pos != expected:
        raise ArrayFileError(
            f"{path}: payload is {len(data) - pos} bytes, expected {expected}"
        )
    patterns = np.frombuffer(
        data, dtype=pattern_dtype(kind).newbyteorder("<"), count=count, offset=pos
    )
    values = from_storage(
        patterns.astype(pattern_dtype(kind)).view(storage_dtype(kind))
    )
    return DenseArray(shape, kind, values.reshape(shape))
