import io
import struct

import numpy as np
import pytest

from chartattrib import errors
from chartattrib.tensorio import read_tensor, write_tensor

MINIMAL = bytes.fromhex("52544e31" "01" "01000000" "0000803f")


def test_minimal_encoding_is_13_bytes():
    buf = io.BytesIO()
    n = write_tensor(np.array([1.0], dtype=np.float32), buf)
    assert n == 13
    assert buf.getvalue() == MINIMAL


def test_rank3_header_and_payload_sizes():
    buf = io.BytesIO()
    t = np.array([1, 2, 3, 4], dtype=np.float32).reshape(2, 2, 1)
    n = write_tensor(t, buf)
    assert n == 4 + 1 + 12 + 16
    data = buf.getvalue()
    assert data[:4] == b"RTN1"
    assert data[4] == 3
    assert struct.unpack("<3I", data[5:17]) == (2, 2, 1)


def test_minimal_decodes_back():
    t = read_tensor(io.BytesIO(MINIMAL))
    assert t.shape == (1,)
    assert t.dtype == np.float32
    assert t[0] == 1.0


def test_round_trip_bitwise_100_random_tensors():
    rng = np.random.default_rng(7)
    for _ in range(100):
        rank = int(rng.integers(1, 4))
        dims = tuple(int(d) for d in rng.integers(1, 6, size=rank))
        t = rng.standard_normal(dims).astype(np.float32)
        buf = io.BytesIO()
        write_tensor(t, buf)
        buf.seek(0)
        back = read_tensor(buf)
        assert back.shape == t.shape
        assert back.tobytes() == t.tobytes()


def test_bad_magic_rejected():
    with pytest.raises(errors.FormatError, match="magic"):
        read_tensor(io.BytesIO(b"XXXX" + MINIMAL[4:]))


def test_nan_payload_names_flat_index():
    payload = MINIMAL[:9] + struct.pack("<I", 0x7FC00000)
    with pytest.raises(errors.ValidationError, match="index 0"):
        read_tensor(io.BytesIO(payload))


def test_trailing_garbage_rejected():
    with pytest.raises(errors.FormatError, match="trailing"):
        read_tensor(io.BytesIO(MINIMAL + b"\x00"))


def test_truncated_stream_is_io_error():
    with pytest.raises(EOFError, match="truncated"):
        read_tensor(io.BytesIO(MINIMAL[:10]))


def test_dim_product_overflow_is_capacity_error():
    header = b"RTN1" + struct.pack("<B", 3) + struct.pack("<3I", 70000, 70000, 70000)
    with pytest.raises(errors.CapacityError):
        read_tensor(io.BytesIO(header))


def test_zero_dim_rejected():
    header = b"RTN1" + struct.pack("<B", 1) + struct.pack("<I", 0)
    with pytest.raises(errors.FormatError):
        read_tensor(io.BytesIO(header))


def test_write_rejects_non_finite_and_bad_rank():
    with pytest.raises(errors.ValidationError):
        write_tensor(np.array([np.nan], dtype=np.float32), io.BytesIO())
    with pytest.raises(errors.ContractError):
        write_tensor(np.zeros((1, 1, 1, 1), dtype=np.float32), io.BytesIO())
