import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from denselines import GridSpec, SeriesSet, TimeSeries


@pytest.fixture
def unit_grid():
    return GridSpec(4, 4, 0.0, 4.0, 0.0, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_series(rng, sid: str, n_points: int, t_span=(0.0, 1.0), v_scale=1.0) -> TimeSeries:
    t = np.sort(rng.uniform(*t_span, size=n_points))
    while len(np.unique(t)) != len(t):
        t = np.sort(rng.uniform(*t_span, size=n_points))
    v = np.cumsum(rng.normal(scale=v_scale, size=n_points))
    return TimeSeries(sid, t, v)


def random_set(rng, n_series: int, n_points: int, full_span=False) -> SeriesSet:
    series = []
    for i in range(n_series):
        s = random_series(rng, f"s-{i:05d}", n_points)
        if full_span:
            s.t[0] = 0.0
            s.t[-1] = 1.0
        series.append(s)
    return SeriesSet.from_series(series)
