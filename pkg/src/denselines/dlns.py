"""DLNS binary container for density matrices.

Layout (all little-endian):

====================  =======  ==========================================
field                 type     notes
====================  =======  ==========================================
magic                 4 bytes  ``DLNS``
version               u32      currently 1
cols                  u32
rows                  u32
series_count          u64
t_min, t_max          2 x f64
v_min, v_max          2 x f64
cells                 f64[]    cols * rows values, column-major
====================  =======  ==========================================

Column-major payload keeps one time column contiguous, matching how the
density math walks the matrix. The format is trivially parseable from any
language; the browser viewer decodes it with a DataView.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import DensityMatrix, GridSpec

MAGIC = b"DLNS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQdddd")


class DlnsError(ValueError):
    """Malformed DLNS data; the message names the offending field."""


def to_bytes(d: DensityMatrix) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        d.grid.cols,
        d.grid.rows,
        d.series_count,
        d.grid.t_min,
        d.grid.t_max,
        d.grid.v_min,
        d.grid.v_max,
    )
    cells = np.ascontiguousarray(d.cells, dtype="<f8")
    return header + cells.tobytes()


def from_bytes(data: bytes) -> DensityMatrix:
    if len(data) < _HEADER.size:
        raise DlnsError("header: truncated (file shorter than the fixed header)")
    magic, version, cols, rows, series_count, t_min, t_max, v_min, v_max = _HEADER.unpack_from(
        data
    )
    if magic != MAGIC:
        raise DlnsError(f"magic: expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise DlnsError(f"version: unsupported {version}")
    if cols < 1 or rows < 1:
        raise DlnsError(f"cols/rows: invalid dimensions {cols}x{rows}")
    if not (t_min < t_max):
        raise DlnsError("t_min/t_max: invalid time extent")
    if not (v_min < v_max):
        raise DlnsError("v_min/v_max: invalid value extent")
    expected = _HEADER.size + cols * rows * 8
    if len(data) != expected:
        raise DlnsError(f"cells: expected {expected} bytes total, got {len(data)}")
    cells = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(cols, rows).copy()
    grid = GridSpec(cols=cols, rows=rows, t_min=t_min, t_max=t_max, v_min=v_min, v_max=v_max)
    return DensityMatrix(grid=grid, cells=cells, series_count=series_count)


def write(d: DensityMatrix, path) -> None:
    with open(path, "wb") as f:
        f.write(to_bytes(d))


def read(path) -> DensityMatrix:
    with open(path, "rb") as f:
        return from_bytes(f.read())
