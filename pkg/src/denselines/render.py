"""Map density values to colors and emit PNG images.

The color mapping applies to the nonzero value range only (by default
``[nonzero-min, max]``), and exactly-zero cells get the background color.
That discontinuity reserves the background exclusively for "no line ever
passed here", so a single outlier series remains visible no matter how large
the densest cells grow.

Signed matrices (differences) require the diverging blue-white-red scale with
zero pinned to the middle; sequential scales are rejected rather than
silently mis-mapped.

PNG output is byte-stable: fixed encoder settings (zlib level 6, no filters
forced, RGBA8) and a deterministic pixel buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .model import ContractError, DensityMatrix
from .post import DensityStats, SignedMatrix, stats
from .viridis_data import VIRIDIS_256


class RenderConfigError(ValueError):
    """Incompatible render settings for the given matrix."""


def _build_diverging() -> tuple[tuple[int, int, int], ...]:
    blue = np.array([59.0, 76.0, 192.0])
    red = np.array([180.0, 4.0, 38.0])
    white = np.array([255.0, 255.0, 255.0])
    table = []
    for i in range(256):
        if i <= 127:
            f = (127 - i) / 127.0
            c = white + (blue - white) * f
        else:
            f = (i - 128) / 127.0
            c = white + (red - white) * f
        table.append(tuple(int(x) for x in np.floor(c + 0.5)))
    return tuple(table)


DIVERGING_256 = _build_diverging()

SCALES = {"viridis": VIRIDIS_256, "diverging": DIVERGING_256}
TRANSFORMS = ("linear", "log1p", "pow")


@dataclass(frozen=True)
class RenderSpec:
    """Color-scale, discontinuity and orientation parameters."""

    scale: str = "viridis"
    transform: str = "linear"
    gamma: float = 1.0
    domain: tuple[float, float] | None = None
    discontinuity: bool = True
    background: tuple[int, int, int, int] = (255, 255, 255, 255)
    flip: bool = True
    legend_ticks: int = 5

    def __post_init__(self):
        if self.scale not in SCALES:
            raise RenderConfigError(f"unknown scale {self.scale!r}")
        if self.transform not in TRANSFORMS:
            raise RenderConfigError(f"unknown transform {self.transform!r}")
        if self.gamma <= 0:
            raise RenderConfigError("gamma must be positive")
        if self.domain is not None and not self.domain[0] < self.domain[1]:
            raise RenderConfigError("explicit domain needs lo < hi")


def _unit_sequential(values: np.ndarray, lo: float, hi: float, spec: RenderSpec) -> np.ndarray:
    if hi <= lo:
        return np.full(values.shape, 0.5)
    if spec.transform == "linear":
        u = (values - lo) / (hi - lo)
    elif spec.transform == "log1p":
        u = (np.log1p(values) - np.log1p(lo)) / (np.log1p(hi) - np.log1p(lo))
    else:  # pow
        u = ((values - lo) / (hi - lo)).clip(0.0, 1.0) ** spec.gamma
    return u.clip(0.0, 1.0)


def _unit_signed(values: np.ndarray, magnitude: float, spec: RenderSpec) -> np.ndarray:
    if magnitude <= 0:
        return np.full(values.shape, 0.5)
    if spec.transform == "linear":
        w = values / magnitude
    elif spec.transform == "log1p":
        w = np.sign(values) * (np.log1p(np.abs(values)) / np.log1p(magnitude))
    else:  # pow
        w = values / magnitude
        w = np.sign(w) * np.abs(w) ** spec.gamma
    return (0.5 + 0.5 * w).clip(0.0, 1.0)


def _table_lookup(u: np.ndarray, table) -> np.ndarray:
    """Linear interpolation between table entries, rounding half up."""
    arr = np.asarray(table, dtype=np.float64)  # (256, 3)
    pos = u * 255.0
    i0 = np.minimum(np.floor(pos), 254.0).astype(np.int64)
    f = (pos - i0)[..., None]
    rgb = arr[i0] * (1.0 - f) + arr[i0 + 1] * f
    return np.floor(rgb + 0.5).astype(np.uint8)


def colorize(matrix: DensityMatrix | SignedMatrix, spec: RenderSpec) -> np.ndarray:
    """RGBA image (rows x cols x 4, uint8) of a density or difference matrix."""
    signed = isinstance(matrix, SignedMatrix)
    if signed and spec.scale != "diverging":
        raise RenderConfigError("signed matrices require the diverging scale")
    cells = matrix.cells
    table = SCALES[spec.scale]

    if signed:
        if spec.domain is not None:
            magnitude = max(abs(spec.domain[0]), abs(spec.domain[1]))
        else:
            magnitude = float(np.abs(cells).max()) if cells.size else 0.0
        u = _unit_signed(cells, magnitude, spec)
    else:
        if spec.domain is not None:
            lo, hi = spec.domain
        else:
            s = stats(matrix)
            hi = s.max
            if spec.discontinuity:
                lo = s.nonzero_min if s.nonzero_min is not None else 0.0
            else:
                lo = 0.0
        u = _unit_sequential(cells, lo, hi, spec)

    rgb = _table_lookup(u, table)  # (cols, rows, 3)
    rgba = np.empty(cells.shape + (4,), dtype=np.uint8)
    rgba[..., :3] = rgb
    rgba[..., 3] = 255
    if spec.discontinuity:
        rgba[cells == 0.0] = np.array(spec.background, dtype=np.uint8)

    img = np.transpose(rgba, (1, 0, 2))  # (rows, cols, 4), row 0 = v_min
    if spec.flip:
        img = img[::-1]
    return np.ascontiguousarray(img)


def encode_png(img: np.ndarray, path) -> None:
    """Write an RGBA array as PNG; identical input gives identical bytes."""
    if img.size == 0:
        raise ValueError("empty image")
    pil = Image.fromarray(img, mode="RGBA")
    try:
        pil.save(path, format="PNG", optimize=False, compress_level=6)
    except OSError as e:
        raise OSError(f"failed writing PNG to {path}: {e}") from e


def png_bytes(img: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    encode_png(img, buf)
    return buf.getvalue()


def _tick_values(lo: float, hi: float, n: int, spec: RenderSpec) -> list[float]:
    if n < 2 or hi <= lo:
        return [lo]
    if spec.transform == "linear":
        return list(np.linspace(lo, hi, n))
    if spec.transform == "log1p":
        return list(np.expm1(np.linspace(np.log1p(lo), np.log1p(hi), n)))
    return list(lo + (hi - lo) * np.linspace(0.0, 1.0, n) ** (1.0 / spec.gamma))


def render_legend(
    spec: RenderSpec,
    matrix_stats: DensityStats,
    *,
    width: int = 320,
    height: int = 42,
) -> np.ndarray:
    """Horizontal color-scale strip with tick labels.

    With the discontinuity enabled the leftmost swatch shows the background
    color (density zero), separated from the gradient by a gray divider.
    """
    if spec.domain is not None:
        lo, hi = spec.domain
    else:
        lo = matrix_stats.nonzero_min if matrix_stats.nonzero_min is not None else 0.0
        hi = matrix_stats.max
    strip_h = height // 2
    img = np.full((height, width, 4), 255, dtype=np.uint8)

    x0 = 0
    if spec.discontinuity:
        swatch = 24
        img[:strip_h, :swatch] = np.array(spec.background, dtype=np.uint8)
        img[:strip_h, swatch : swatch + 2] = (128, 128, 128, 255)
        x0 = swatch + 2

    gradient_w = width - x0
    u = np.linspace(0.0, 1.0, gradient_w)
    rgb = _table_lookup(u, SCALES[spec.scale])
    img[:strip_h, x0:, :3] = rgb[None, :, :]
    img[:strip_h, x0:, 3] = 255

    pil = Image.fromarray(img, mode="RGBA")
    draw = ImageDraw.Draw(pil)
    ticks = _tick_values(lo, hi, spec.legend_ticks, spec)
    for i, val in enumerate(ticks):
        frac = i / max(len(ticks) - 1, 1)
        x = x0 + frac * (gradient_w - 1)
        label = f"{val:g}"
        tw = draw.textlength(label)
        tx = min(max(x - tw / 2, 0), width - tw)
        draw.text((tx, strip_h + 2), label, fill=(0, 0, 0, 255))
    if spec.discontinuity:
        draw.text((2, strip_h + 2), "0", fill=(0, 0, 0, 255))
    return np.asarray(pil)
