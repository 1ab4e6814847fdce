"""Per-column normalization and aggregation of many series into one density.

The pipeline per series: rasterize onto the grid, divide every cell by its
column's weight sum so each touched column carries mass exactly 1, then sum
the normalized matrices of all series cellwise. A cell of the result reads as
"how many series pass through this time/value bin", counting a series that
spends only part of a column's time span in the cell fractionally.

Three rasterization modes:

* ``binary``  - Bresenham occupancy, the default;
* ``aa``      - anti-aliased coverage weights;
* ``exact``   - analytic time-in-band weighting per column (no rasterization
  bias at all; binary mode converges to it as the grid gets finer).

``raw=True`` skips the normalization step. That reproduces the classic
artifact of naive line heatmaps: steep, high-frequency stretches look denser
than they are because they simply paint more cells.

``compute_denselines`` distributes the map phase over worker processes. The
reduction is deterministic by default: series are processed in id order, chunk
boundaries depend only on the data, and partial grids are summed in chunk
order - so results are bit-identical across runs and worker counts.
"""

from __future__ import annotations

import multiprocessing
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernel, raster
from .ingest import SeriesSet
from .model import ContractError, DensityMatrix, GridSpec, SeriesMatrix, TimeSeries

MODES = ("binary", "aa", "exact")


def normalize_columns(m: SeriesMatrix, counts: np.ndarray) -> SeriesMatrix:
    """Divide each cell by its column count; touched columns then sum to 1."""
    if m.normalized:
        raise ContractError("matrix is already normalized")
    columns = {}
    for col, (rows, weights) in m.columns.items():
        if counts[col] > 0:
            columns[col] = (rows, weights / counts[col])
    return SeriesMatrix(grid=m.grid, columns=columns, normalized=True)


def series_density(
    series: TimeSeries,
    grid: GridSpec,
    mode: str = "binary",
    *,
    max_gap: float | None = None,
) -> SeriesMatrix:
    """One series' normalized per-column density matrix."""
    if mode == "binary":
        m = raster.rasterize_bresenham(series, grid, max_gap=max_gap)
        return normalize_columns(m, raster.column_counts(m))
    if mode == "aa":
        m = raster.rasterize_antialiased(series, grid, max_gap=max_gap)
        return normalize_columns(m, raster.column_counts(m))
    if mode == "exact":
        offsets = np.array([0, len(series)], dtype=np.int64)
        dense = _kernel.exact_chunk(
            np.asarray(series.t, dtype=np.float64),
            np.asarray(series.v, dtype=np.float64),
            offsets,
            grid,
            max_gap=max_gap,
        )
        columns = {}
        for col in np.flatnonzero(dense.any(axis=1)):
            rows = np.flatnonzero(dense[col])
            columns[int(col)] = (rows, dense[col, rows])
        return SeriesMatrix(grid=grid, columns=columns, normalized=True)
    raise ContractError(f"unknown mode {mode!r}")


def aggregate(
    matrices: Iterable[SeriesMatrix],
    grid: GridSpec,
    *,
    require_normalized: bool = True,
) -> DensityMatrix:
    """Cellwise sum of per-series matrices (the reduce step)."""
    out = DensityMatrix.zeros(grid)
    n = 0
    for m in matrices:
        if m.grid != grid:
            raise ContractError("grid mismatch in aggregation")
        if require_normalized and not m.normalized:
            raise ContractError("aggregate expects normalized matrices")
        for col, (rows, weights) in m.columns.items():
            out.cells[col, rows] += weights
        n += 1
    out.series_count = n
    return out


@dataclass(frozen=True)
class DensityOptions:
    mode: str = "binary"
    raw: bool = False
    max_gap: float | None = None


# worker-side dataset reference, installed once per pool via fork inheritance
_WORKER_DATA: dict = {}


def _worker_init(t, v, offsets):
    _WORKER_DATA["t"] = t
    _WORKER_DATA["v"] = v
    _WORKER_DATA["offsets"] = offsets


def _chunk_task(args):
    s0, s1, grid, mode, raw, max_gap = args
    t = _WORKER_DATA["t"]
    v = _WORKER_DATA["v"]
    offsets = _WORKER_DATA["offsets"]
    return _compute_chunk(t, v, offsets, s0, s1, grid, mode, raw, max_gap)


def _compute_chunk(t, v, offsets, s0, s1, grid, mode, raw, max_gap) -> np.ndarray:
    lo, hi = offsets[s0], offsets[s1]
    sub_off = np.asarray(offsets[s0 : s1 + 1]) - lo
    sub_t = t[lo:hi]
    sub_v = v[lo:hi]
    if mode == "binary":
        return _kernel.binary_chunk(sub_t, sub_v, sub_off, grid, raw=raw, max_gap=max_gap)
    if mode == "exact":
        return _kernel.exact_chunk(sub_t, sub_v, sub_off, grid, raw=raw, max_gap=max_gap)
    if mode == "aa":
        acc = np.zeros(grid.shape(), dtype=np.float64)
        for i in range(s1 - s0):
            a, b = sub_off[i], sub_off[i + 1]
            series = TimeSeries("", sub_t[a:b], sub_v[a:b])
            m = raster.rasterize_antialiased(series, grid, max_gap=max_gap)
            if not raw:
                m = normalize_columns(m, raster.column_counts(m))
            for col, (rows, weights) in m.columns.items():
                acc[col, rows] += weights
        return acc
    raise ContractError(f"unknown mode {mode!r}")


def compute_denselines(
    dataset: SeriesSet,
    grid: GridSpec,
    options: DensityOptions = DensityOptions(),
    *,
    workers: int = 1,
    ordered: bool = True,
) -> DensityMatrix:
    """Aggregate density of a whole dataset, optionally in parallel.

    Equals ``aggregate(series_density(s) for s in dataset)`` but runs orders
    of magnitude faster through the batched engine. With ``ordered=True``
    (default) the output is bit-identical for any worker count; the unordered
    reduction sums partial grids as they arrive and is reproducible only to
    ~1e-9 relative.

    ``workers > 1`` forks a process pool; on fork-capable platforms the
    dataset is shared copy-on-write, so only the small partial grids travel
    between processes.
    """
    if options.mode not in MODES:
        raise ContractError(f"unknown mode {options.mode!r}")
    if len(dataset) == 0:
        return DensityMatrix.zeros(grid)
    dataset = dataset.sorted_by_id()
    bounds = _kernel.chunk_bounds(dataset.offsets)
    tasks = [(s0, s1, grid, options.mode, options.raw, options.max_gap) for s0, s1 in bounds]

    if workers == 0:
        workers = os.cpu_count() or 1

    acc = np.zeros(grid.shape(), dtype=np.float64)
    if workers > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(
            min(workers, len(tasks)),
            initializer=_worker_init,
            initargs=(dataset.t, dataset.v, dataset.offsets),
        ) as pool:
            mapper = pool.imap if ordered else pool.imap_unordered
            for part in mapper(_chunk_task, tasks):
                acc += part
    else:
        for s0, s1, *_ in tasks:
            acc += _compute_chunk(
                dataset.t,
                dataset.v,
                dataset.offsets,
                s0,
                s1,
                grid,
                options.mode,
                options.raw,
                options.max_gap,
            )
    return DensityMatrix(grid=grid, cells=acc, series_count=len(dataset))
