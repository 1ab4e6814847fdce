"""Rasterize one series' polyline onto the grid.

Binary mode marks every cell the line passes through with 1 (idempotent on
revisits); anti-aliased mode distributes Wu-style coverage weights in [0, 1]
(revisits keep the maximum). Endpoints of in-range samples snap to cell
centers before binary rasterization, so the discrete output depends only on
the binning, not on where inside a cell a sample falls. Segments reaching
outside the grid are clipped to the grid rectangle in continuous coordinates,
which keeps zoomed viewports from bending lines at the edges.

These per-series functions are the reference semantics; the batched engine in
``_kernel`` reproduces them at scale and is cross-checked against them.
"""

from __future__ import annotations

import math

import numpy as np

from .model import GridSpec, SeriesMatrix, TimeSeries, cells_of


def bresenham_cells(c0: int, r0: int, c1: int, r1: int) -> list[tuple[int, int]]:
    """Integer Bresenham between two cells, c0 <= c1.

    Exactly ``max(|dc|, |dr|) + 1`` cells, one step per unit along the major
    axis; the minor coordinate rounds half away from the start (floor division
    keeps this consistent for negative slopes).
    """
    dc = c1 - c0
    dr = r1 - r0
    adr = abs(dr)
    out = []
    if dc >= adr:
        if dc == 0:
            return [(c0, r0)]
        den = 2 * dc
        for j in range(dc + 1):
            out.append((c0 + j, r0 + (2 * j * dr + dc) // den))
    else:
        s = 1 if dr > 0 else -1
        den = 2 * adr
        for k in range(adr + 1):
            out.append((c0 + (2 * k * dc + adr) // den, r0 + s * k))
    return out


def clip_segment(
    xa: float, ya: float, xb: float, yb: float, cols: int, rows: int
) -> tuple[float, float, float, float] | None:
    """Liang-Barsky clip against [0, cols] x [0, rows]; None when outside.

    Endpoints already inside are returned bit-unchanged (no lerp wobble).
    """
    dx = xb - xa
    dy = yb - ya
    u0, u1 = 0.0, 1.0
    for p, q in ((-dx, xa), (dx, cols - xa), (-dy, ya), (dy, rows - ya)):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        r = q / p
        if p < 0.0:
            if r > u1:
                return None
            if r > u0:
                u0 = r
        else:
            if r < u0:
                return None
            if r < u1:
                u1 = r
    if u0 > u1:
        return None
    cxa, cya = (xa, ya) if u0 == 0.0 else (xa + u0 * dx, ya + u0 * dy)
    cxb, cyb = (xb, yb) if u1 == 1.0 else (xa + u1 * dx, ya + u1 * dy)
    return cxa, cya, cxb, cyb


def _cell_of_coord(x: float, n: int) -> int:
    return min(max(int(math.floor(x)), 0), n - 1)


def _kept_pairs(series: TimeSeries, max_gap: float | None) -> list[int]:
    """Start indices of segments that survive the gap policy."""
    n = len(series)
    if max_gap is None:
        return list(range(n - 1))
    return [i for i in range(n - 1) if series.t[i + 1] - series.t[i] <= max_gap]


def _isolated_samples(n: int, kept: list[int]) -> list[int]:
    """Samples attached to no segment; they rasterize as single points."""
    attached = set()
    for i in kept:
        attached.add(i)
        attached.add(i + 1)
    return [i for i in range(n) if i not in attached]


def _segment_cells(series: TimeSeries, grid: GridSpec, kept: list[int]):
    """Iterate integer cell endpoints (c0, r0, c1, r1) of drawable segments.

    Segments with both samples in range rasterize between the samples' cell
    centers; segments touching out-of-range samples are clipped on the true
    continuous geometry instead.
    """
    x = grid.x(series.t)
    y = grid.y(series.v)
    col, row, inside = cells_of(series.t, series.v, grid)
    for i in kept:
        if inside[i] and inside[i + 1]:
            yield int(col[i]), int(row[i]), int(col[i + 1]), int(row[i + 1])
            continue
        clipped = clip_segment(x[i], y[i], x[i + 1], y[i + 1], grid.cols, grid.rows)
        if clipped is None:
            continue
        cxa, cya, cxb, cyb = clipped
        yield (
            _cell_of_coord(cxa, grid.cols),
            _cell_of_coord(cya, grid.rows),
            _cell_of_coord(cxb, grid.cols),
            _cell_of_coord(cyb, grid.rows),
        )


def _matrix_from_cells(grid: GridSpec, weights: dict[tuple[int, int], float]) -> SeriesMatrix:
    columns: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    by_col: dict[int, list[tuple[int, float]]] = {}
    for (c, r), w in weights.items():
        by_col.setdefault(c, []).append((r, w))
    for c, items in by_col.items():
        items.sort()
        rows = np.array([r for r, _ in items], dtype=np.int64)
        ws = np.array([w for _, w in items], dtype=np.float64)
        columns[c] = (rows, ws)
    return SeriesMatrix(grid=grid, columns=columns, normalized=False)


def rasterize_bresenham(
    series: TimeSeries, grid: GridSpec, *, max_gap: float | None = None
) -> SeriesMatrix:
    """Binary occupancy of the series' polyline (weights exactly 1.0)."""
    hit: dict[tuple[int, int], float] = {}
    kept = _kept_pairs(series, max_gap)
    col, row, inside = cells_of(series.t, series.v, grid)
    for i in _isolated_samples(len(series), kept):
        if inside[i]:
            hit[(int(col[i]), int(row[i]))] = 1.0
    for c0, r0, c1, r1 in _segment_cells(series, grid, kept):
        for cell in bresenham_cells(c0, r0, c1, r1):
            hit[cell] = 1.0
    return _matrix_from_cells(grid, hit)


def _split(major: int, minor_coord: float, n_minor: int, transpose: bool):
    """One Wu step: coverage split across the two cells nearest the line."""
    base = math.floor(minor_coord)
    f = minor_coord - base
    step = []
    for cell_minor, w in ((base, 1.0 - f), (base + 1, f)):
        if 0 <= cell_minor < n_minor and w > 0.0:
            cell = (cell_minor, major) if transpose else (major, cell_minor)
            step.append((cell, w))
    return step


def _aa_segment_steps(xa, ya, xb, yb, cols, rows):
    """Wu coverage steps for one continuous segment, in cell-center coords.

    Each step is the two-cell split at an integer crossing of the stepping
    lattice and its weights sum to 1 before grid clipping. Every segment
    steps at the column centers it crosses (which guarantees that a polyline
    spanning a column range touches all of it); steep segments additionally
    step at the row centers they cross so tall runs stay covered.
    """
    xca, yca = xa - 0.5, ya - 0.5
    xcb, ycb = xb - 0.5, yb - 0.5
    dx = xb - xa  # > 0: time strictly increases
    dy = yb - ya
    steps = []
    j_lo = max(0, math.ceil(xca))
    j_hi = min(cols - 1, math.floor(xcb))
    if j_lo <= j_hi:
        slope = dy / dx
        for j in range(j_lo, j_hi + 1):
            yc = yca + (j - xca) * slope
            step = _split(j, yc, rows, transpose=False)
            if step:
                steps.append(step)
    if abs(dy) > dx:
        lo, hi = (yca, ycb) if dy > 0 else (ycb, yca)
        k_lo = max(0, math.ceil(lo))
        k_hi = min(rows - 1, math.floor(hi))
        if k_lo <= k_hi:
            slope = dx / dy
            for k in range(k_lo, k_hi + 1):
                xc = xca + (k - yca) * slope
                step = _split(k, xc, cols, transpose=True)
                if step:
                    steps.append(step)
    return steps


def rasterize_antialiased(
    series: TimeSeries, grid: GridSpec, *, max_gap: float | None = None
) -> SeriesMatrix:
    """Coverage weights of an idealized one-cell-thick line (Wu splits).

    Unlike binary mode this uses the samples' true continuous positions; a
    line running exactly between two rows covers both at 0.5. Revisited cells
    keep the maximum weight, consistent with binary idempotence.
    """
    best: dict[tuple[int, int], float] = {}
    kept = _kept_pairs(series, max_gap)
    col, row, inside = cells_of(series.t, series.v, grid)
    for i in _isolated_samples(len(series), kept):
        if inside[i]:
            best[(int(col[i]), int(row[i]))] = 1.0
    x = grid.x(series.t)
    y = grid.y(series.v)
    for i in kept:
        for step in _aa_segment_steps(x[i], y[i], x[i + 1], y[i + 1], grid.cols, grid.rows):
            for cell, w in step:
                if w > best.get(cell, 0.0):
                    best[cell] = w
    return _matrix_from_cells(grid, best)


def column_counts(m: SeriesMatrix) -> np.ndarray:
    """Per-column weight sums, the normalization denominators."""
    counts = np.zeros(m.grid.cols, dtype=np.float64)
    for col, (_, weights) in m.columns.items():
        counts[col] = weights.sum()
    return counts
