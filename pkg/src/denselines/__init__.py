"""Density line charts for large collections of time series.

Rasterize each series onto a time/value grid, normalize every column of each
series' matrix so the series contributes the same mass to every time step it
spans, and sum the matrices of all series into one density matrix. The result
scales to millions of lines and reads as "how many series pass through here".
"""

from .density import DensityOptions, aggregate, compute_denselines, normalize_columns, series_density
from .ingest import (
    SeriesSet,
    TwoBandModelSpec,
    generate_random_walks,
    generate_two_band,
    parse_csv,
    write_csv,
)
from .model import DensityMatrix, GridSpec, Segment, SeriesMatrix, TimeSeries, arc_length, to_cell
from .post import SignedMatrix, diff, gaussian_smooth, stats
from .raster import column_counts, rasterize_antialiased, rasterize_bresenham
from .render import RenderSpec, colorize, encode_png, render_legend

__all__ = [
    "DensityMatrix",
    "DensityOptions",
    "GridSpec",
    "Segment",
    "SeriesMatrix",
    "SeriesSet",
    "SignedMatrix",
    "TimeSeries",
    "TwoBandModelSpec",
    "aggregate",
    "arc_length",
    "colorize",
    "column_counts",
    "compute_denselines",
    "diff",
    "encode_png",
    "gaussian_smooth",
    "generate_random_walks",
    "generate_two_band",
    "normalize_columns",
    "parse_csv",
    "rasterize_antialiased",
    "rasterize_bresenham",
    "render_legend",
    "RenderSpec",
    "series_density",
    "stats",
    "to_cell",
    "write_csv",
]
