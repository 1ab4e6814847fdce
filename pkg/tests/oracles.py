"""Independent brute-force oracles used to validate the fast implementations.

Everything here favors obviousness over speed and never calls the code paths
it checks.
"""

from __future__ import annotations

import math

import numpy as np

from denselines import aggregate, column_counts, normalize_columns
from denselines import rasterize_antialiased, rasterize_bresenham, series_density
from denselines.model import DensityMatrix, GridSpec


def param_walk_cells(c0: int, r0: int, c1: int, r1: int, step: float = 1e-3) -> set:
    """Cells touched by a dense parametric walk along the segment.

    Positions are rounded half-up to the nearest cell center; with a small
    enough step this enumerates every cell whose center the ideal line passes
    closest to.
    """
    length = max(abs(c1 - c0), abs(r1 - r0), 1)
    n = int(math.ceil(length / step))
    cells = set()
    for k in range(n + 1):
        u = k / n
        x = c0 + u * (c1 - c0)
        y = r0 + u * (r1 - r0)
        cells.add((math.floor(x + 0.5), math.floor(y + 0.5)))
    return cells


def sampled_exact_density(t, v, grid: GridSpec, n_samples: int = 100_000) -> np.ndarray:
    """Time-in-cell histogram from dense uniform sampling of the polyline.

    Deterministic midpoint sampling; per-column distributions converge to the
    analytic time-weighted mode at O(1/n_samples).
    """
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u = (np.arange(n_samples) + 0.5) / n_samples
    tt = t[0] + u * (t[-1] - t[0])
    vv = np.interp(tt, t, v)
    x = grid.x(tt)
    y = grid.y(vv)
    ok = (x >= 0) & (x <= grid.cols) & (y >= 0) & (y <= grid.rows)
    col = np.minimum(np.floor(x[ok]).astype(int), grid.cols - 1)
    row = np.minimum(np.floor(y[ok]).astype(int), grid.rows - 1)
    counts = np.zeros((grid.cols, grid.rows))
    np.add.at(counts, (col, row), 1.0)
    sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        out = np.where(sums > 0, counts / np.where(sums > 0, sums, 1.0), 0.0)
    return out


def brute_gaussian_smooth(cells: np.ndarray, sigma: float) -> np.ndarray:
    """Direct double-loop mass-preserving truncated-Gaussian convolution."""
    radius = math.ceil(3.0 * sigma)
    k = np.arange(-radius, radius + 1, dtype=float)
    taps = np.exp(-0.5 * (k / sigma) ** 2)
    taps /= taps.sum()
    cols, rows = cells.shape
    out = np.zeros_like(cells)
    for sc in range(cols):
        for sr in range(rows):
            mass = cells[sc, sr]
            if mass == 0.0:
                continue
            weights = {}
            for dc in range(-radius, radius + 1):
                for dr in range(-radius, radius + 1):
                    pc, pr = sc + dc, sr + dr
                    if 0 <= pc < cols and 0 <= pr < rows:
                        weights[(pc, pr)] = taps[dc + radius] * taps[dr + radius]
            total = sum(weights.values())
            for (pc, pr), w in weights.items():
                out[pc, pr] += mass * w / total
    return out


def slow_density(dataset, grid: GridSpec, mode: str = "binary", raw: bool = False) -> DensityMatrix:
    """Per-series public-API aggregation; the dual route to the batch engine."""
    if raw:
        make = rasterize_bresenham if mode == "binary" else rasterize_antialiased
        matrices = (make(s, grid) for s in dataset)
        return aggregate(matrices, grid, require_normalized=False)
    return aggregate((series_density(s, grid, mode) for s in dataset), grid)
