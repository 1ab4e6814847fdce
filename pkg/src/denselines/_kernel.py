"""Batched array engine behind the density pipeline.

Processes many series at once with numpy instead of looping cell by cell.
The trick that makes binary mode collapse into array operations: a series'
samples are time-sorted, so its polyline visits the columns of the grid left
to right, and within any single column the cells it touches form one
contiguous run of rows (consecutive segments share the junction cell, and a
single Bresenham segment covers a contiguous row run per column). A series'
whole rasterization is therefore a per-column interval [lo, hi], and the
interval is the min/max over the per-segment intervals - no cell sets needed.

Per-segment intervals come from inverting Bresenham's stepping in closed
form, which reproduces the reference walk in ``raster`` exactly (tested
against it). Accumulation uses row-difference pairs (+w at lo, -w at hi+1)
summed with ``bincount`` and integrated with one cumulative sum per chunk; an
integer "touched" channel masks out floating-point residue so cells no series
touched stay exactly zero.

Everything here is deterministic: chunk boundaries depend only on the data,
never on the worker count, and each chunk is a pure function of its slice.
"""

from __future__ import annotations

import numpy as np

from .model import GridSpec

# target samples per chunk; a worker-count-independent constant so that the
# reduction tree (and thus the bit-exact result) never depends on parallelism
CHUNK_SAMPLES = 500_000


def chunk_bounds(offsets: np.ndarray, target: int = CHUNK_SAMPLES) -> list[tuple[int, int]]:
    """Split series into runs of at most ``target`` samples (full series only)."""
    n = len(offsets) - 1
    bounds = []
    s0 = 0
    while s0 < n:
        s1 = int(np.searchsorted(offsets, offsets[s0] + target, side="left"))
        s1 = max(s1, s0 + 1)  # a single oversized series still forms a chunk
        s1 = min(s1, n)
        bounds.append((s0, s1))
        s0 = s1
    return bounds


def _ragged(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expand group sizes into (group_index, offset_within_group) arrays."""
    total = int(counts.sum())
    group = np.repeat(np.arange(len(counts), dtype=np.int64), counts)
    starts = np.zeros(len(counts), dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    within = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    return group, within


def clip_arrays(xa, ya, xb, yb, cols: int, rows: int):
    """Vectorized Liang-Barsky against [0, cols] x [0, rows].

    Returns clipped endpoint arrays plus a keep mask; endpoints already
    inside pass through bit-unchanged (same branch structure as the scalar
    ``raster.clip_segment``).
    """
    dx = xb - xa
    dy = yb - ya
    u0 = np.zeros(xa.shape, dtype=np.float64)
    u1 = np.ones(xa.shape, dtype=np.float64)
    ok = np.ones(xa.shape, dtype=bool)
    for p, q in ((-dx, xa), (dx, cols - xa), (-dy, ya), (dy, rows - ya)):
        para = p == 0.0
        ok &= ~(para & (q < 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = q / np.where(para, 1.0, p)
        u0 = np.where((p < 0.0) & (r > u0), r, u0)
        u1 = np.where((p > 0.0) & (r < u1), r, u1)
    ok &= u0 <= u1
    cxa = np.where(u0 > 0.0, xa + u0 * dx, xa)
    cya = np.where(u0 > 0.0, ya + u0 * dy, ya)
    cxb = np.where(u1 < 1.0, xa + u1 * dx, xb)
    cyb = np.where(u1 < 1.0, ya + u1 * dy, yb)
    return cxa, cya, cxb, cyb, ok


def _segment_starts(t: np.ndarray, offsets: np.ndarray, max_gap: float | None) -> np.ndarray:
    """Sample indices that start a drawable segment (pairs within one series)."""
    n_samples = len(t)
    if n_samples < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(n_samples - 1, dtype=bool)
    last = offsets[1:] - 1
    mask[last[last < n_samples - 1]] = False
    if max_gap is not None:
        mask &= (t[1:] - t[:-1]) <= max_gap
    return np.flatnonzero(mask)


def _series_of(sample_idx: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    return np.searchsorted(offsets, sample_idx, side="right") - 1


def _isolated_cells(inside, col, row, seg_starts, n_samples):
    """Cells of in-range samples attached to no segment (single points).

    Covers single-sample series and samples stranded by the max-gap policy;
    they rasterize as one marked cell each.
    """
    attached = np.zeros(n_samples, dtype=bool)
    attached[seg_starts] = True
    attached[seg_starts + 1] = True
    iso = np.flatnonzero(~attached & inside)
    if iso.size == 0:
        return None
    return col[iso], row[iso]


def _grid_from_diffs(idx, wts, cols: int, rows: int) -> np.ndarray:
    """Integrate (+w, -w) row-difference entries into a dense (cols, rows) grid."""
    stride = rows + 1
    dense = np.bincount(idx, weights=wts, minlength=cols * stride)
    dense = dense.reshape(cols, stride)
    np.cumsum(dense, axis=1, out=dense)
    touched = np.bincount(idx, weights=np.where(wts > 0, 1.0, -1.0), minlength=cols * stride)
    touched = touched.reshape(cols, stride)
    np.cumsum(touched, axis=1, out=touched)
    # mask + clamp: keeps never-touched cells exactly 0 and eats the ~1e-16
    # cancellation residue the running sum can leave behind
    return np.where(touched[:, :rows] > 0.5, np.maximum(dense[:, :rows], 0.0), 0.0)


def binary_chunk(
    t: np.ndarray,
    v: np.ndarray,
    offsets: np.ndarray,
    grid: GridSpec,
    raw: bool = False,
    max_gap: float | None = None,
) -> np.ndarray:
    """Density grid of one chunk of series, binary (Bresenham) mode."""
    cols, rows = grid.cols, grid.rows
    x = grid.x(t)
    y = grid.y(v)
    inside = (x >= 0.0) & (x <= cols) & (y >= 0.0) & (y <= rows)
    col = np.minimum(np.floor(x).astype(np.int64), cols - 1)
    row = np.minimum(np.floor(y).astype(np.int64), rows - 1)

    a = _segment_starts(t, offsets, max_gap)
    series_of_seg = _series_of(a, offsets)

    c0 = col[a].copy()
    r0 = row[a].copy()
    c1 = col[a + 1].copy()
    r1 = row[a + 1].copy()
    keep = np.ones(len(a), dtype=bool)
    boundary = np.flatnonzero(~(inside[a] & inside[a + 1]))
    if boundary.size:
        # segments touching out-of-range samples: clip true continuous coords
        b = a[boundary]
        cxa, cya, cxb, cyb, ok = clip_arrays(x[b], y[b], x[b + 1], y[b + 1], cols, rows)
        keep[boundary] = ok
        c0[boundary] = np.clip(np.floor(cxa).astype(np.int64), 0, cols - 1)
        r0[boundary] = np.clip(np.floor(cya).astype(np.int64), 0, rows - 1)
        c1[boundary] = np.clip(np.floor(cxb).astype(np.int64), 0, cols - 1)
        r1[boundary] = np.clip(np.floor(cyb).astype(np.int64), 0, rows - 1)
    if not np.all(keep):
        c0, r0, c1, r1 = c0[keep], r0[keep], c1[keep], r1[keep]
        series_of_seg = series_of_seg[keep]

    # expand segments into (segment, column) pairs
    dc = c1 - c0
    dr = r1 - r0
    adr = np.abs(dr)
    pair_seg, jj = _ragged(dc + 1)
    pdc = dc[pair_seg]
    pdr = dr[pair_seg]
    padr = adr[pair_seg]
    pr0 = r0[pair_seg]
    den = 2 * np.maximum(pdc, 1)

    # x-major: exactly one row per column, half rounds away from the start
    r_flat = pr0 + np.where(pdc > 0, (2 * jj * pdr + pdc) // den, 0)

    # y-major: invert the stepping to get the run of rows inside this column
    num_lo = padr * (2 * jj - 1)
    num_hi = padr * (2 * jj + 1) - 1
    klo = np.maximum(np.where(pdc > 0, -((-num_lo) // den), 0), 0)
    khi = np.minimum(np.where(pdc > 0, num_hi // den, padr), padr)
    sgn = np.sign(pdr)
    r_a = pr0 + sgn * klo
    r_b = pr0 + sgn * khi

    xmaj = pdc >= padr
    rlo = np.where(xmaj, r_flat, np.minimum(r_a, r_b))
    rhi = np.where(xmaj, r_flat, np.maximum(r_a, r_b))

    # union per (series, column): intervals of one series in one column always
    # overlap through shared junction cells, so min/max is the exact union
    key = series_of_seg[pair_seg] * np.int64(cols) + c0[pair_seg] + jj
    if key.size and np.any(np.diff(key) < 0):
        raise AssertionError("internal: (series, column) keys not monotone")
    if key.size:
        starts = np.concatenate(([0], np.flatnonzero(np.diff(key)) + 1))
        ucol = key[starts] % cols
        lo = np.minimum.reduceat(rlo, starts)
        hi = np.maximum.reduceat(rhi, starts)
    else:
        ucol = lo = hi = np.zeros(0, dtype=np.int64)

    if raw:
        w = np.ones(len(ucol), dtype=np.float64)
    else:
        w = 1.0 / (hi - lo + 1.0)

    base = ucol * np.int64(rows + 1)
    idx = np.concatenate([base + lo, base + hi + 1])
    wts = np.concatenate([w, -w])

    singles = _isolated_cells(inside, col, row, a, len(t))
    if singles is not None:
        scol, srow = singles
        sbase = scol * np.int64(rows + 1)
        idx = np.concatenate([idx, sbase + srow, sbase + srow + 1])
        ones = np.ones(len(scol), dtype=np.float64)
        wts = np.concatenate([wts, ones, -ones])

    return _grid_from_diffs(idx, wts, cols, rows)


def exact_chunk(
    t: np.ndarray,
    v: np.ndarray,
    offsets: np.ndarray,
    grid: GridSpec,
    raw: bool = False,
    max_gap: float | None = None,
) -> np.ndarray:
    """Density grid of one chunk, exact time-weighted mode.

    Each column distributes mass over rows in proportion to the time the
    piecewise-linear trajectory spends in each row's value band, computed
    analytically from the row-boundary crossings. Values outside the grid
    contribute neither mass nor normalization time.
    """
    cols, rows = grid.cols, grid.rows
    x = grid.x(t)
    y = grid.y(v)

    a = _segment_starts(t, offsets, max_gap)
    series_of_seg = _series_of(a, offsets)

    xa, xb = x[a], x[a + 1]
    ya, yb = y[a], y[a + 1]
    xlo = np.maximum(xa, 0.0)
    xhi = np.minimum(xb, float(cols))
    vis = xlo < xhi
    if not np.all(vis):
        xa, xb, ya, yb = xa[vis], xb[vis], ya[vis], yb[vis]
        xlo, xhi = xlo[vis], xhi[vis]
        series_of_seg = series_of_seg[vis]
    slope = (yb - ya) / (xb - xa)  # xb > xa: t is strictly increasing

    cs = np.minimum(np.floor(xlo).astype(np.int64), cols - 1)
    ce = np.minimum(np.floor(xhi).astype(np.int64), cols - 1)
    pair_seg, jj = _ragged(ce - cs + 1)
    pcol = cs[pair_seg] + jj

    # time window of this (segment, column) piece, in column-width units
    pxa = np.maximum(xlo[pair_seg], pcol.astype(np.float64))
    pxb = np.minimum(xhi[pair_seg], (pcol + 1).astype(np.float64))
    tp = pxb - pxa

    py_a = ya[pair_seg] + (pxa - xa[pair_seg]) * slope[pair_seg]
    py_b = ya[pair_seg] + (pxb - xa[pair_seg]) * slope[pair_seg]
    ylo = np.minimum(py_a, py_b)
    yhi = np.maximum(py_a, py_b)
    yloc = np.clip(ylo, 0.0, float(rows))
    yhic = np.clip(yhi, 0.0, float(rows))

    span = yhi - ylo
    flat = span == 0.0
    flat_in = flat & (ylo >= 0.0) & (ylo <= float(rows))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(flat, 0.0, tp / np.where(flat, 1.0, span))
    tin = np.where(flat, np.where(flat_in, tp, 0.0), rho * (yhic - yloc))

    live = tin > 0.0
    pcol = pcol[live]
    pser = series_of_seg[pair_seg[live]]
    tp, rho, tin = tp[live], rho[live], tin[live]
    yloc, yhic = yloc[live], yhic[live]
    flat = flat[live]

    rlo = np.minimum(np.floor(yloc).astype(np.int64), rows - 1)
    rhi = np.minimum(np.floor(yhic).astype(np.int64), rows - 1)
    rhi = np.maximum(rhi, rlo)

    # per-(series, column) normalization over the in-band time
    key = pser * np.int64(cols) + pcol
    if key.size and np.any(np.diff(key) < 0):
        raise AssertionError("internal: (series, column) keys not monotone")
    if raw:
        scale = np.ones(len(key), dtype=np.float64)
    elif key.size:
        starts = np.concatenate(([0], np.flatnonzero(np.diff(key)) + 1))
        totals = np.add.reduceat(tin, starts)
        sizes = np.diff(np.concatenate([starts, [len(key)]]))
        scale = np.repeat(1.0 / totals, sizes)
    else:
        scale = np.zeros(0, dtype=np.float64)

    single_row = rlo == rhi
    m_single = np.where(flat, tp, tin) * scale
    m_lo = rho * ((rlo + 1).astype(np.float64) - yloc) * scale
    m_hi = rho * (yhic - rhi.astype(np.float64)) * scale
    m_rho = rho * scale

    base = pcol * np.int64(rows + 1)
    idx_parts = []
    wts_parts = []

    def emit(mask, at, m):
        mask = mask & (m != 0.0)
        if not np.any(mask):
            return
        i = (base + at)[mask]
        w = m[mask]
        idx_parts.extend((i, i + 1))
        wts_parts.extend((w, -w))

    # degenerate index guard: "+1" targets stay within the (rows+1) stride
    emit(single_row, rlo, m_single)
    multi = ~single_row
    emit(multi, rlo, m_lo)
    emit(multi, rhi, m_hi)
    interior = multi & (rhi - rlo >= 2)
    if np.any(interior & (m_rho != 0.0)):
        sel = interior & (m_rho != 0.0)
        i0 = (base + rlo + 1)[sel]
        i1 = (base + rhi)[sel]
        w = m_rho[sel]
        idx_parts.extend((i0, i1))
        wts_parts.extend((w, -w))

    inside = (x >= 0.0) & (x <= cols) & (y >= 0.0) & (y <= rows)
    col_all = np.minimum(np.floor(x).astype(np.int64), cols - 1)
    row_all = np.minimum(np.floor(y).astype(np.int64), rows - 1)
    singles = _isolated_cells(inside, col_all, row_all, a, len(t))
    if singles is not None:
        scol, srow = singles
        sbase = scol * np.int64(rows + 1)
        ones = np.ones(len(scol), dtype=np.float64)
        idx_parts.extend((sbase + srow, sbase + srow + 1))
        wts_parts.extend((ones, -ones))

    if not idx_parts:
        return np.zeros((cols, rows), dtype=np.float64)
    idx = np.concatenate(idx_parts)
    wts = np.concatenate(wts_parts)
    return _grid_from_diffs(idx, wts, cols, rows)
