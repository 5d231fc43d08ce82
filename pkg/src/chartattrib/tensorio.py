"""Binary tensor files (".rtn", format tag RTN1).

Layout, all little-endian:

    bytes 0..3    magic "RTN1" (0x52 0x54 0x4E 0x31)
    byte  4       rank, 1..3
    next 4*rank   dims, unsigned 32-bit, each >= 1
    rest          values, IEEE-754 binary32, row-major (last dim fastest)

The encoding is byte-exact and platform independent, so an extractor
written in any language can hand grids to this engine without sharing a
runtime. Values must be finite: NaN/Inf are rejected at this boundary so
the math downstream never needs a NaN policy.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import CapacityError, ContractError, FormatError, ValidationError

MAGIC = b"RTN1"
MAX_RANK = 3
# 2^28 float32 values = 1 GiB payload; guards the dims-product overflow path.
DEFAULT_MAX_ELEMENTS = 1 << 28


def write_tensor(values: np.ndarray, sink: BinaryIO) -> int:
    """Encode a rank 1..3 float32 array into `sink`. Returns bytes written."""
    arr = np.asarray(values)
    if arr.ndim not in (1, 2, 3):
        raise ContractError(f"tensor rank must be 1..{MAX_RANK}, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ValidationError(f"dims must be positive, got {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(arr).all():
        idx = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
        raise ValidationError(f"non-finite value at flat index {idx}")
    header = MAGIC + struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    written = 0
    for chunk in (header, arr.tobytes()):
        try:
            sink.write(chunk)
        except OSError as exc:
            raise OSError(f"write failed at byte offset {written}: {exc}") from exc
        written += len(chunk)
    return written


def _read_exact(source: BinaryIO, n: int, offset: int) -> bytes:
    data = source.read(n)
    if len(data) != n:
        raise EOFError(
            f"truncated stream: wanted {n} bytes at offset {offset}, got {len(data)}"
        )
    return data


def read_tensor(source: BinaryIO, max_elements: int = DEFAULT_MAX_ELEMENTS) -> np.ndarray:
    """Decode one tensor written by `write_tensor`; rejects trailing bytes."""
    magic = _read_exact(source, 4, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    rank = _read_exact(source, 1, 4)[0]
    if not 1 <= rank <= MAX_RANK:
        raise FormatError(f"rank must be 1..{MAX_RANK}, got {rank}")
    offset = 5
    dims = struct.unpack(f"<{rank}I", _read_exact(source, 4 * rank, offset))
    offset += 4 * rank
    if any(d == 0 for d in dims):
        raise FormatError(f"zero dim in {dims}")
    count = 1
    for d in dims:
        count *= d
    if count > max_elements:
        raise CapacityError(f"{count} values exceed the {max_elements}-element budget")
    payload = _read_exact(source, 4 * count, offset)
    if source.read(1) != b"":
        raise FormatError("trailing bytes after tensor payload")
    values = np.frombuffer(payload, dtype="<f4").reshape(dims)
    if not np.isfinite(values).all():
        idx = int(np.flatnonzero(~np.isfinite(values.ravel()))[0])
        raise ValidationError(f"non-finite value at flat index {idx}")
    return values.copy()  # frombuffer views are read-only


def save_tensor(values: np.ndarray, path) -> int:
    with open(path, "wb") as f:
        return write_tensor(values, f)


def load_tensor(path, max_elements: int = DEFAULT_MAX_ELEMENTS) -> np.ndarray:
    with open(path, "rb") as f:
        return read_tensor(f, max_elements)
