"""
TNSR and CSV file formats.

TNSR layout: magic b'TNSR', version byte 1, little-endian u32 order n, n little-endian u32 dims, then the data as
little-endian float64 in canonical (mode-1 fastest) order. Matrices are order-2 tensors.
"""

import os
import struct

import numpy as np

from util.detail import LOGGER
from util.errors import InvalidArgument
from tensor.ops import as_tensor

TNSR_MAGIC = b'TNSR'
TNSR_VERSION = 1

_HEADER = struct.Struct('<4sBI')
_DIM = struct.Struct('<I')


def write_tnsr(path: str, t) -> None:
    t = as_tensor(t)
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(TNSR_MAGIC, TNSR_VERSION, t.ndim))
        for dim in t.shape:
            f.write(_DIM.pack(dim))
        f.write(np.asarray(t, dtype='<f8').tobytes(order='F'))
    LOGGER.debug(f"Wrote {t.shape} tensor to {path}")


def read_tnsr(path: str) -> np.ndarray:
    with open(path, 'rb') as f:
        payload = f.read()

    if len(payload) < _HEADER.size:
        raise InvalidArgument(f"{path}: truncated TNSR header")

    magic, version, order = _HEADER.unpack_from(payload, 0)
    if magic != TNSR_MAGIC:
        raise InvalidArgument(f"{path}: bad magic {magic!r}")
    if version != TNSR_VERSION:
        raise InvalidArgument(f"{path}: unsupported TNSR version {version}")

    offset = _HEADER.size
    if len(payload) < offset + order * _DIM.size:
        raise InvalidArgument(f"{path}: truncated TNSR dims")
    shape = tuple(_DIM.unpack_from(payload, offset + i * _DIM.size)[0] for i in range(order))
    offset += order * _DIM.size

    count = int(np.prod(shape)) if order else 1
    if len(payload) - offset != count * 8:
        raise InvalidArgument(f"{path}: expected {count} values for shape {shape}, "
                              f"found {(len(payload) - offset) / 8:g}")

    data = np.frombuffer(payload, dtype='<f8', count=count, offset=offset)
    return np.reshape(data.astype(np.float64), shape, order='F')


def write_matrix_csv(path: str, m) -> None:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidArgument(f"CSV output needs a matrix, got shape {m.shape}")
    np.savetxt(path, m, delimiter=',', fmt='%.17g')


def read_matrix_csv(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=',', ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise InvalidArgument(f"{path}: not a numeric CSV matrix") from e


def load_tensor(path: str) -> np.ndarray:
    """Reads a .tnsr or .csv file based on its extension."""
    ext = os.path.splitext(path)[1].lower()
    if ext == '.csv':
        return read_matrix_csv(path)
    elif ext == '.tnsr':
        return read_tnsr(path)
    else:
        raise InvalidArgument(f"{path}: unknown tensor file extension {ext!r}")


def save_tensor(path: str, t) -> None:
    ext = os.path.splitext(path)[1].lower()
    if ext == '.csv':
        write_matrix_csv(path, t)
    elif ext == '.tnsr':
        write_tnsr(path, t)
    else:
        raise InvalidArgument(f"{path}: unknown tensor file extension {ext!r}")
