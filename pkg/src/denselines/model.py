"""Core value types: time series, grid discretization, and segment geometry.

Conventions used throughout the package:

* The time/value plane is discretized into ``cols`` x ``rows`` half-open bins;
  the last bin on each axis is closed on top so the declared domain is covered
  exactly (``t_max`` maps into column ``cols - 1``).
* Row 0 corresponds to ``v_min`` (bottom-up indexing). Images are flipped
  vertically only at render time.
* Continuous grid coordinates measure position in bin units:
  ``x = (t - t_min) * cols / (t_max - t_min)``, so cell ``j`` covers
  ``[j, j+1)``. Binning multiplies by a precomputed scale factor rather than
  dividing by the bin width; every module uses the same arithmetic so that
  boundary samples land in the same cell everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ContractError(ValueError):
    """An operation was called in a state its contract forbids."""


@dataclass
class TimeSeries:
    """One ordered sequence of (time, value) samples.

    ``t`` must be strictly increasing and both arrays finite; ingestion is
    responsible for sorting and de-duplicating before construction.
    """

    id: str
    t: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def validate(self) -> "TimeSeries":
        if len(self.t) != len(self.v):
            raise ContractError(f"series {self.id!r}: t/v length mismatch")
        if len(self.t) < 1:
            raise ContractError(f"series {self.id!r}: needs at least one sample")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.v))):
            raise ContractError(f"series {self.id!r}: non-finite sample")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ContractError(f"series {self.id!r}: t not strictly increasing")
        return self


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the time x value plane into cols x rows bins."""

    cols: int
    rows: int
    t_min: float
    t_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1:
            raise ContractError("grid needs cols >= 1 and rows >= 1")
        if not (self.t_min < self.t_max and self.v_min < self.v_max):
            raise ContractError("grid needs t_min < t_max and v_min < v_max")

    @property
    def x_scale(self) -> float:
        return self.cols / (self.t_max - self.t_min)

    @property
    def y_scale(self) -> float:
        return self.rows / (self.v_max - self.v_min)

    def x(self, t):
        """Continuous column coordinate of a time value (array-friendly)."""
        return (np.asarray(t, dtype=np.float64) - self.t_min) * self.x_scale

    def y(self, v):
        """Continuous row coordinate of a value (array-friendly)."""
        return (np.asarray(v, dtype=np.float64) - self.v_min) * self.y_scale

    def shape(self) -> tuple[int, int]:
        return (self.cols, self.rows)


def to_cell(t: float, v: float, grid: GridSpec) -> tuple[int, int] | None:
    """Map a point to its (col, row) cell, or ``None`` when out of range.

    The domain boundary is inclusive: ``t == t_max`` maps to the last column
    and ``v == v_max`` to the last row.
    """
    x = (t - grid.t_min) * grid.x_scale
    y = (v - grid.v_min) * grid.y_scale
    if not (0.0 <= x <= grid.cols and 0.0 <= y <= grid.rows):
        return None
    col = min(int(math.floor(x)), grid.cols - 1)
    row = min(int(math.floor(y)), grid.rows - 1)
    return col, row


def cells_of(t: np.ndarray, v: np.ndarray, grid: GridSpec):
    """Vectorized :func:`to_cell`.

    Returns ``(cols, rows, inside)`` where ``inside`` is a boolean mask and
    the cell indices are only meaningful where ``inside`` is true.
    """
    x = grid.x(t)
    y = grid.y(v)
    inside = (x >= 0.0) & (x <= grid.cols) & (y >= 0.0) & (y <= grid.rows)
    col = np.minimum(np.floor(x).astype(np.int64), grid.cols - 1)
    row = np.minimum(np.floor(y).astype(np.int64), grid.rows - 1)
    return col, row, inside


@dataclass(frozen=True)
class Segment:
    """A directed segment in continuous grid coordinates, x0 <= x1."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def dx(self) -> float:
        return self.x1 - self.x0

    @property
    def dy(self) -> float:
        return self.y1 - self.y0


def arc_length(seg: Segment) -> float:
    """Euclidean length of a segment; exactly ``dx`` for horizontal ones."""
    if seg.dy == 0.0:
        return abs(seg.dx)
    return math.hypot(seg.dx, seg.dy)


@dataclass
class SeriesMatrix:
    """One series' per-cell weights, stored as per-column cell lists.

    ``columns`` maps a column index to a pair of parallel arrays
    ``(rows, weights)``; columns the series never touches are absent. A dense
    cols x rows matrix would be wasteful: one series touches on the order of
    ``cols`` cells, not ``cols * rows``.
    """

    grid: GridSpec
    columns: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    normalized: bool = False

    def to_dense(self) -> np.ndarray:
        """Materialize as a (cols, rows) float array (tests, small inputs)."""
        out = np.zeros(self.grid.shape(), dtype=np.float64)
        for col, (rows, weights) in self.columns.items():
            out[col, rows] = weights
        return out

    def cell(self, col: int, row: int) -> float:
        rows, weights = self.columns.get(col, (None, None))
        if rows is None:
            return 0.0
        hit = np.flatnonzero(rows == row)
        return float(weights[hit[0]]) if hit.size else 0.0


@dataclass
class DensityMatrix:
    """Aggregated density over all series: a dense (cols, rows) array.

    ``cells[j]`` is column ``j``, contiguous in memory; this matches both the
    per-column math and the column-major file layout.
    """

    grid: GridSpec
    cells: np.ndarray
    series_count: int = 0

    @classmethod
    def zeros(cls, grid: GridSpec, series_count: int = 0) -> "DensityMatrix":
        return cls(grid, np.zeros(grid.shape(), dtype=np.float64), series_count)

    def column_totals(self) -> np.ndarray:
        return self.cells.sum(axis=1)
