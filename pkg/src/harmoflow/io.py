"""Binary tensor files and 8-bit PGM plot planes.

Tensor file layout (little-endian)::

    b"HOF1" | u32 version | u32 dtype code (1 = f64) | u32 rank | u64 dims[rank] | f64 payload

Complex amplitudes are stored real-valued with a leading ``(re, im)`` axis,
i.e. dims ``(2, d, n1, n2)``.
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"HOF1"
VERSION = 1
DTYPE_F64 = 1
_HEADER = struct.Struct("<4sIII")


def write_tensor(path, array):
    """Write a real array as a tensor file (C order)."""
    array = np.asarray(array)
    if np.iscomplexobj(array):
        raise DataError("complex arrays must be split first (see write_amplitude)")
    data = np.ascontiguousarray(array, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F64, data.ndim))
        fh.write(struct.pack(f"<{data.ndim}Q", *data.shape))
        fh.write(data.tobytes(order="C"))


def read_tensor(path):
    """Read a tensor file, validating magic, version, dtype and payload length."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, version, dtype, rank = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if dtype != DTYPE_F64:
        raise DataError(f"{path}: unsupported dtype code {dtype}")
    offset = _HEADER.size + 8 * rank
    if len(raw) < offset:
        raise DataError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{rank}Q", raw, _HEADER.size)
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - offset != 8 * count:
        raise DataError(f"{path}: payload has {len(raw) - offset} bytes, expected {8 * count}")
    return np.frombuffer(raw, dtype="<f8", offset=offset).reshape(dims).astype(float)


def write_amplitude(path, a):
    a = np.asarray(a, dtype=complex)
    write_tensor(path, np.stack([a.real, a.imag]))


def read_amplitude(path):
    data = read_tensor(path)
    if data.ndim != 4 or data.shape[0] != 2:
        raise DataError(f"{path}: amplitude tensor must have dims (2, d, n1, n2), got {data.shape}")
    return data[0] + 1j * data[1]


def write_pgm(path, plane):
    """Binary 8-bit PGM of ``plane`` min-max normalized; returns the ``(min, max)`` bounds."""
    plane = np.asarray(plane, dtype=float)
    if plane.ndim != 2:
        raise DataError("PGM planes must be 2D")
    lo, hi = float(plane.min()), float(plane.max())
    span = hi - lo
    scaled = np.zeros(plane.shape) if span == 0 else (plane - lo) / span
    pixels = np.round(255 * scaled).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{plane.shape[1]} {plane.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return lo, hi


def read_pgm(path):
    """Read a binary 8-bit PGM written by :func:`write_pgm`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM")
    width, height, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit PGM is supported")
    body = raw[len(raw) - width * height:]
    return np.frombuffer(body, dtype=np.uint8).reshape(height, width)
