"""Binary matrix container used for feature files and projection coordinates.

Layout: an 8-byte header of two little-endian uint32 values (n_rows, n_cols)
followed by n_rows * n_cols little-endian float32 values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MissingFileError, ShapeMismatchError

_HEADER = struct.Struct("<II")


def write_matrix(path: str | Path, values: np.ndarray) -> None:
    """Write a 2D array to ``path`` in the binary matrix format (as float32)."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise ShapeMismatchError(f"expected a 2D array, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_matrix(path: str | Path) -> np.ndarray:
    """Read a binary matrix file and return it as a float64 array."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(str(path))
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ShapeMismatchError(f"{path}: file shorter than the 8-byte header")
    n_rows, n_cols = _HEADER.unpack_from(blob)
    expected = _HEADER.size + 4 * n_rows * n_cols
    if len(blob) != expected:
        raise ShapeMismatchError(
            f"{path}: header says {n_rows}x{n_cols} ({expected} bytes), file has {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(n_rows, n_cols).astype(np.float64)


def matrix_bytes(values: np.ndarray) -> bytes:
    """Serialize a 2D array to the binary matrix format in memory."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise ShapeMismatchError(f"expected a 2D array, got shape {arr.shape}")
    return _HEADER.pack(arr.shape[0], arr.shape[1]) + arr.tobytes()
