"""Strict reader/writer for 2-D float arrays in '.npy' version 1.0 files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format


def save_array(path: str | Path, array: np.ndarray) -> None:
    """Write a 2-D array as float64, C-order, format version 1.0."""
    out = np.ascontiguousarray(array, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {out.shape}")
    with open(path, "wb") as f:
        npy_format.write_array(f, out, version=(1, 0), allow_pickle=False)


def _read_header(f, path):
    try:
        version = npy_format.read_magic(f)
    except ValueError as exc:
        raise ValueError(f"{path}: not an '.npy' file ({exc})") from None
    if version != (1, 0):
        raise ValueError(f"{path}: unsupported '.npy' version {version[0]}.{version[1]}, need 1.0")
    shape, fortran_order, dtype = npy_format.read_array_header_1_0(f)
    if len(shape) != 2:
        raise ValueError(f"{path}: expected a 2-D array, got shape {shape}")
    if fortran_order:
        raise ValueError(f"{path}: Fortran-ordered data not supported, need row-major")
    if dtype.kind != "f" or dtype.itemsize not in (4, 8):
        raise ValueError(f"{path}: element type {dtype} not supported, need 32- or 64-bit floats")
    return shape, dtype


def peek_shape(path: str | Path) -> tuple[int, int]:
    """Read (frames, dims) from the header without loading the data."""
    with open(path, "rb") as f:
        shape, _ = _read_header(f, path)
    return shape


def load_array(path: str | Path) -> np.ndarray:
    """Load a validated 2-D float array, widened to float64."""
    with open(path, "rb") as f:
        shape, dtype = _read_header(f, path)
        count = shape[0] * shape[1]
        raw = f.read(count * dtype.itemsize)
    if len(raw) != count * dtype.itemsize:
        raise ValueError(f"{path}: truncated data, expected {count} elements")
    array = np.frombuffer(raw, dtype=dtype).reshape(shape)
    array = array.astype(np.float64, copy=False)
    if not np.isfinite(array).all():
        raise ValueError(f"{path}: array contains non-finite values")
    return array
