"""Post-processing of density matrices: smoothing, subtraction, statistics.

Smoothing runs on the aggregated matrix, never per series - binning and
summarizing first keeps the smoothing cost proportional to the grid, not the
data. The Gaussian kernel is truncated at ``ceil(3 * sigma)`` taps and
renormalized over in-grid taps at the boundaries: every source cell spreads
exactly its own mass, so the matrix total is preserved to floating-point
accuracy (reflection or zero padding would not do that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from .model import ContractError, DensityMatrix, GridSpec

# kernels smaller than a tenth of a cell are below the grid's resolution
IDENTITY_SIGMA = 0.1


def _gaussian_taps(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-0.5 * (k / sigma) ** 2)
    return taps / taps.sum()


def gaussian_smooth(d: DensityMatrix, sigma: float) -> DensityMatrix:
    """Separable mass-preserving Gaussian blur of a density matrix."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if sigma <= IDENTITY_SIGMA:
        return DensityMatrix(d.grid, d.cells.copy(), d.series_count)
    taps = _gaussian_taps(sigma)
    # normalize outgoing weight per source cell: divide by the in-grid kernel
    # mass around each position, then convolve; symmetric kernel makes the
    # per-source and per-destination views transposes of each other
    ones = np.ones_like(d.cells)
    coverage = convolve1d(ones, taps, axis=0, mode="constant", cval=0.0)
    coverage = convolve1d(coverage, taps, axis=1, mode="constant", cval=0.0)
    seeded = d.cells / coverage
    out = convolve1d(seeded, taps, axis=0, mode="constant", cval=0.0)
    out = convolve1d(out, taps, axis=1, mode="constant", cval=0.0)
    np.maximum(out, 0.0, out=out)
    return DensityMatrix(d.grid, out, d.series_count)


@dataclass
class SignedMatrix:
    """Cellwise difference of two densities; entries may be negative."""

    grid: GridSpec
    cells: np.ndarray


def diff(a: DensityMatrix, b: DensityMatrix) -> SignedMatrix:
    """Cellwise ``a - b`` for densities on the same grid."""
    if a.grid != b.grid:
        raise ContractError("diff requires identical grids")
    return SignedMatrix(a.grid, a.cells - b.cells)


@dataclass(frozen=True)
class DensityStats:
    min: float
    max: float
    nonzero_min: float | None
    total: float
    column_totals: np.ndarray


def stats(d: DensityMatrix) -> DensityStats:
    """Exact reductions over the cells; nonzero_min is None for all-zero input."""
    cells = d.cells
    column_totals = cells.sum(axis=1)
    nz = cells[cells > 0]
    return DensityStats(
        min=float(cells.min()) if cells.size else 0.0,
        max=float(cells.max()) if cells.size else 0.0,
        nonzero_min=float(nz.min()) if nz.size else None,
        total=float(column_totals.sum()),
        column_totals=column_totals,
    )
