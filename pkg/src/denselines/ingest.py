"""Dataset loading and synthetic generators.

CSV is the one mandatory input format: header ``series_id,time,value``,
numeric time (no calendar semantics). Parsing is streaming - rows are
consumed one at a time and grouped per series, so memory is proportional to
the parsed data, never to intermediate text buffers.

Random generation is reproducible by construction and documented so other
implementations can match it bit for bit:

* generator: Philox4x64-10 counter-based PRNG, keyed by the user seed;
* uniforms: 53-bit integers mapped to the open interval (0, 1) via
  ``(k + 0.5) / 2**53``;
* normals: inverse normal CDF (``scipy.special.ndtri``) of those uniforms.

All series of a dataset are drawn from one keyed stream in a fixed order, so
results do not depend on how the work is later parallelized.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy.special import ndtri

from .model import ContractError, TimeSeries

CSV_HEADER = ("series_id", "time", "value")


class DataFormatError(ValueError):
    """Input data does not conform to the expected format."""


@dataclass
class SeriesSet:
    """A collection of series in columnar form.

    Sample arrays of all series are concatenated; ``offsets[i]:offsets[i+1]``
    slices out series ``i``. This keeps a million small series cheap to store
    and lets the density engine consume slices without per-series objects.
    """

    ids: list[str]
    t: np.ndarray
    v: np.ndarray
    offsets: np.ndarray
    t_extent: tuple[float, float]
    v_extent: tuple[float, float]

    def __len__(self) -> int:
        return len(self.ids)

    def series(self, i: int) -> TimeSeries:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return TimeSeries(self.ids[i], self.t[lo:hi], self.v[lo:hi])

    def __iter__(self) -> Iterator[TimeSeries]:
        return (self.series(i) for i in range(len(self)))

    def sample_count(self) -> int:
        return int(self.offsets[-1])

    @classmethod
    def from_series(cls, series: Iterable[TimeSeries]) -> "SeriesSet":
        series = list(series)
        if not series:
            raise DataFormatError("no series")
        ids = [s.id for s in series]
        if len(set(ids)) != len(ids):
            raise DataFormatError("duplicate series ids")
        t = np.concatenate([np.asarray(s.t, dtype=np.float64) for s in series])
        v = np.concatenate([np.asarray(s.v, dtype=np.float64) for s in series])
        offsets = np.zeros(len(series) + 1, dtype=np.int64)
        np.cumsum([len(s.t) for s in series], out=offsets[1:])
        return cls._with_extents(ids, t, v, offsets)

    @classmethod
    def _with_extents(cls, ids, t, v, offsets) -> "SeriesSet":
        if t.size == 0:
            raise DataFormatError("no series")
        return cls(
            ids=ids,
            t=t,
            v=v,
            offsets=offsets,
            t_extent=(float(t.min()), float(t.max())),
            v_extent=(float(v.min()), float(v.max())),
        )

    def subset(self, indices: np.ndarray | list[int]) -> "SeriesSet":
        """New set containing the selected series (order preserved)."""
        indices = np.asarray(indices, dtype=np.int64)
        lengths = (self.offsets[1:] - self.offsets[:-1])[indices]
        offsets = np.zeros(len(indices) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        # gather concatenated sample ranges without a Python loop per series
        starts = self.offsets[indices]
        pos = np.arange(int(lengths.sum()), dtype=np.int64)
        rel = pos - np.repeat(offsets[:-1], lengths)
        src = np.repeat(starts, lengths) + rel
        return SeriesSet._with_extents(
            [self.ids[i] for i in indices], self.t[src], self.v[src], offsets
        )

    def sorted_by_id(self) -> "SeriesSet":
        order = sorted(range(len(self)), key=lambda i: self.ids[i])
        if order == list(range(len(self))):
            return self
        return self.subset(order)


def parse_csv(stream) -> SeriesSet:
    """Parse ``series_id,time,value`` rows into a :class:`SeriesSet`.

    Rows are grouped by id; within a series, samples are sorted by time and
    rows sharing an exact (id, time) pair are merged by averaging their
    values. Accepts text or binary streams (UTF-8).
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if hasattr(stream, "read") and isinstance(stream.read(0), bytes):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")

    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("no series") from None
    if [h.strip() for h in header] != list(CSV_HEADER):
        raise DataFormatError(
            f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
        )

    groups: dict[str, tuple[list[float], list[float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataFormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        sid, t_text, v_text = row
        try:
            t = float(t_text)
            v = float(v_text)
        except ValueError:
            raise DataFormatError(f"line {lineno}: unparseable number") from None
        if not (np.isfinite(t) and np.isfinite(v)):
            raise DataFormatError(f"line {lineno}: non-finite value")
        bucket = groups.get(sid)
        if bucket is None:
            bucket = groups[sid] = ([], [])
        bucket[0].append(t)
        bucket[1].append(v)

    if not groups:
        raise DataFormatError("no series")

    series = []
    for sid, (ts, vs) in groups.items():
        t = np.asarray(ts, dtype=np.float64)
        v = np.asarray(vs, dtype=np.float64)
        uniq, inverse = np.unique(t, return_inverse=True)
        if len(uniq) != len(t):
            # duplicate timestamps: average, order-independently
            sums = np.bincount(inverse, weights=v, minlength=len(uniq))
            counts = np.bincount(inverse, minlength=len(uniq))
            v = sums / counts
            t = uniq
        else:
            order = np.argsort(t, kind="stable")
            t = t[order]
            v = v[order]
        series.append(TimeSeries(sid, t, v).validate())
    return SeriesSet.from_series(series)


def write_csv(dataset: SeriesSet, stream) -> None:
    """Inverse of :func:`parse_csv`; 17 significant digits round-trip floats."""
    stream.write("series_id,time,value\n")
    for s in dataset:
        sid = s.id
        for t, v in zip(s.t, s.v):
            stream.write(f"{sid},{t:.17g},{v:.17g}\n")


def _open01(rng: np.random.Generator, shape) -> np.ndarray:
    # 53-bit integers -> open (0,1); documented portable uniform path
    k = rng.integers(0, 1 << 53, size=shape, dtype=np.int64)
    return (k + 0.5) / float(1 << 53)


def _normals(rng: np.random.Generator, shape) -> np.ndarray:
    return ndtri(_open01(rng, shape))


@dataclass(frozen=True)
class TwoBandModelSpec:
    """Parameters of the two-group validation model.

    Group 1 is a constant-frequency sinusoid; group 2 is a chirp whose
    amplitude and frequency grow linearly in t, placed in a lower value band.
    Per-series vertical jitter is normal with ``jitter_sd``, truncated at
    three standard deviations so the two bands can never overlap.
    """

    n_per_group: int = 5000
    samples_per_series: int = 256
    seed: int = 0
    g1_amplitude: float = 0.12
    g1_frequency: float = 3.0
    g1_offset: float = 0.70
    g2_base_amplitude: float = 0.05
    g2_base_frequency: float = 4.0
    g2_amplitude_growth: float = 0.10
    g2_frequency_growth: float = 8.0
    g2_offset: float = 0.30
    jitter_sd: float = 0.01

    def __post_init__(self):
        if self.n_per_group < 1:
            raise ContractError("n_per_group must be >= 1")
        if self.samples_per_series < 2:
            raise ContractError("samples_per_series must be >= 2")
        g1_lo = self.g1_offset - self.g1_amplitude - 3 * self.jitter_sd
        g2_hi = (
            self.g2_offset
            + self.g2_base_amplitude
            + self.g2_amplitude_growth
            + 3 * self.jitter_sd
        )
        if g2_hi >= g1_lo:
            raise ContractError("group bands overlap; lower jitter or amplitudes")

    @property
    def band_boundary(self) -> float:
        """A value separating the two groups' bands."""
        g1_lo = self.g1_offset - self.g1_amplitude - 3 * self.jitter_sd
        g2_hi = (
            self.g2_offset
            + self.g2_base_amplitude
            + self.g2_amplitude_growth
            + 3 * self.jitter_sd
        )
        return 0.5 * (g1_lo + g2_hi)


def two_band_curves(spec: TwoBandModelSpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The two noiseless model curves evaluated at ``t``."""
    g1 = spec.g1_amplitude * np.sin(2 * np.pi * spec.g1_frequency * t) + spec.g1_offset
    amp = spec.g2_base_amplitude + spec.g2_amplitude_growth * t
    freq = spec.g2_base_frequency + spec.g2_frequency_growth * t
    g2 = amp * np.sin(2 * np.pi * freq * t) + spec.g2_offset
    return g1, g2


def generate_two_band(spec: TwoBandModelSpec) -> SeriesSet:
    """Sample ``2 * n_per_group`` series from the two-band model.

    Deterministic per seed. Ids are ``g1-...`` / ``g2-...`` with zero padding,
    so lexicographic order equals generation order.
    """
    n = spec.n_per_group
    p = spec.samples_per_series
    t = np.linspace(0.0, 1.0, p)
    g1_curve, g2_curve = two_band_curves(spec, t)

    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    jitter = _normals(rng, 2 * n) * spec.jitter_sd
    if spec.jitter_sd > 0:
        np.clip(jitter, -3 * spec.jitter_sd, 3 * spec.jitter_sd, out=jitter)

    v = np.empty((2 * n, p), dtype=np.float64)
    v[:n] = g1_curve[None, :] + jitter[:n, None]
    v[n:] = g2_curve[None, :] + jitter[n:, None]

    width = max(4, len(str(n - 1)))
    ids = [f"g1-{i:0{width}d}" for i in range(n)] + [
        f"g2-{i:0{width}d}" for i in range(n)
    ]
    offsets = np.arange(2 * n + 1, dtype=np.int64) * p
    return SeriesSet._with_extents(ids, np.tile(t, 2 * n), v.reshape(-1), offsets)


def generate_random_walks(seed: int, n_series: int, samples_per_series: int) -> SeriesSet:
    """Gaussian random walks over t in [0, 1], deterministic per seed."""
    if n_series < 1:
        raise ContractError("n_series must be >= 1")
    if samples_per_series < 2:
        raise ContractError("samples_per_series must be >= 2")
    n, p = n_series, samples_per_series
    rng = np.random.Generator(np.random.Philox(key=seed))
    v = _normals(rng, (n, p))
    np.cumsum(v, axis=1, out=v)
    t = np.linspace(0.0, 1.0, p)
    width = max(4, len(str(n - 1)))
    ids = [f"rw-{i:0{width}d}" for i in range(n)]
    offsets = np.arange(n + 1, dtype=np.int64) * p
    return SeriesSet._with_extents(ids, np.tile(t, n), v.reshape(-1), offsets)
