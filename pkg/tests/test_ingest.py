import io

import numpy as np
import pytest

from denselines import (
    SeriesSet,
    TwoBandModelSpec,
    generate_random_walks,
    generate_two_band,
    parse_csv,
    write_csv,
)
from denselines.ingest import DataFormatError, two_band_curves


def parse(text: str) -> SeriesSet:
    return parse_csv(io.StringIO(text))


class TestParseCsv:
    def test_basic_grouping(self):
        ds = parse("series_id,time,value\na,0,1\na,1,2\nb,0,5\n")
        assert len(ds) == 2
        a = ds.series(ds.ids.index("a"))
        assert list(a.t) == [0.0, 1.0]
        assert list(a.v) == [1.0, 2.0]

    def test_rows_sorted_by_time(self):
        ds = parse("series_id,time,value\na,1,2\na,0,1\n")
        a = ds.series(0)
        assert list(a.t) == [0.0, 1.0]
        assert list(a.v) == [1.0, 2.0]

    def test_duplicate_times_averaged(self):
        ds = parse("series_id,time,value\na,0,1\na,0,3\n")
        a = ds.series(0)
        assert list(a.t) == [0.0]
        assert list(a.v) == [2.0]

    def test_bad_header_names_expected(self):
        with pytest.raises(DataFormatError, match="series_id,time,value"):
            parse("id,t,v\na,0,1\n")

    def test_bad_row_carries_line_number(self):
        with pytest.raises(DataFormatError, match="line 3"):
            parse("series_id,time,value\na,0,1\na,zzz,1\n")

    def test_nonfinite_rejected(self):
        with pytest.raises(DataFormatError, match="line 2"):
            parse("series_id,time,value\na,0,inf\n")

    def test_empty_input(self):
        with pytest.raises(DataFormatError, match="no series"):
            parse("")
        with pytest.raises(DataFormatError, match="no series"):
            parse("series_id,time,value\n")

    def test_crlf_and_bytes(self):
        ds = parse_csv(b"series_id,time,value\r\na,0,1\r\na,1,2\r\n")
        assert len(ds) == 1
        assert ds.series(0).t.tolist() == [0.0, 1.0]

    def test_extents_cover_min_max(self):
        ds = parse("series_id,time,value\na,0,1\na,2,-3\nb,5,7\n")
        assert ds.t_extent == (0.0, 5.0)
        assert ds.v_extent == (-3.0, 7.0)

    def test_round_trip(self, rng):
        series_text = ["series_id,time,value"]
        for sid in ("alpha", "beta"):
            t = np.sort(rng.uniform(0, 10, 40))
            v = rng.normal(size=40)
            series_text += [f"{sid},{a:.17g},{b:.17g}" for a, b in zip(t, v)]
        ds = parse("\n".join(series_text) + "\n")
        buf = io.StringIO()
        write_csv(ds, buf)
        ds2 = parse_csv(io.StringIO(buf.getvalue()))
        assert ds2.ids == ds.ids
        np.testing.assert_allclose(ds2.t, ds.t, rtol=0, atol=1e-12)
        np.testing.assert_allclose(ds2.v, ds.v, rtol=0, atol=1e-12)


class TestTwoBand:
    def test_deterministic(self):
        spec = TwoBandModelSpec(n_per_group=20, samples_per_series=32, seed=9)
        a = generate_two_band(spec)
        b = generate_two_band(spec)
        assert a.ids == b.ids
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.v, b.v)

    def test_degenerate_model_traces_base_curves(self):
        spec = TwoBandModelSpec(n_per_group=1, samples_per_series=64, seed=0, jitter_sd=0.0)
        ds = generate_two_band(spec)
        assert len(ds) == 2
        t = ds.series(0).t
        g1, g2 = two_band_curves(spec, t)
        np.testing.assert_allclose(ds.series(0).v, g1, atol=1e-15)
        np.testing.assert_allclose(ds.series(1).v, g2, atol=1e-15)

    def test_paper_scale_counts(self):
        spec = TwoBandModelSpec(n_per_group=5000, samples_per_series=8, seed=1)
        ds = generate_two_band(spec)
        assert len(ds) == 10_000

    def test_bands_do_not_overlap(self):
        spec = TwoBandModelSpec(n_per_group=200, samples_per_series=64, seed=5)
        ds = generate_two_band(spec)
        boundary = spec.band_boundary
        for i in range(len(ds)):
            s = ds.series(i)
            if s.id.startswith("g1-"):
                assert s.v.min() > boundary
            else:
                assert s.v.max() < boundary

    def test_sample_structure(self):
        spec = TwoBandModelSpec(n_per_group=3, samples_per_series=16, seed=2)
        ds = generate_two_band(spec)
        for s in ds:
            assert len(s) == 16
            assert np.all(np.diff(s.t) > 0)
            assert s.t[0] == 0.0 and s.t[-1] == 1.0


class TestRandomWalks:
    def test_deterministic(self):
        a = generate_random_walks(4, 50, 10)
        b = generate_random_walks(4, 50, 10)
        assert a.ids == b.ids
        assert np.array_equal(a.v, b.v)

    def test_seed_changes_output(self):
        a = generate_random_walks(4, 50, 10)
        b = generate_random_walks(5, 50, 10)
        assert not np.array_equal(a.v, b.v)

    def test_minimal_two_point_series(self):
        ds = generate_random_walks(0, 10, 2)
        for s in ds:
            assert len(s) == 2

    def test_shapes_and_span(self):
        ds = generate_random_walks(1, 25, 12)
        assert len(ds) == 25
        for s in ds:
            assert len(s) == 12
            assert s.t[0] == 0.0 and s.t[-1] == 1.0
            assert np.all(np.diff(s.t) > 0)


class TestSeriesSet:
    def test_subset_preserves_samples(self, rng):
        ds = generate_random_walks(2, 10, 7)
        sub = ds.subset([1, 4, 8])
        assert sub.ids == [ds.ids[1], ds.ids[4], ds.ids[8]]
        np.testing.assert_array_equal(sub.series(1).v, ds.series(4).v)

    def test_sorted_by_id_noop_when_sorted(self):
        ds = generate_random_walks(2, 5, 4)
        assert ds.sorted_by_id() is ds

    def test_duplicate_ids_rejected(self):
        from denselines import TimeSeries

        s1 = TimeSeries("x", np.array([0.0, 1.0]), np.array([0.0, 1.0]))
        s2 = TimeSeries("x", np.array([0.0, 1.0]), np.array([2.0, 3.0]))
        with pytest.raises(DataFormatError):
            SeriesSet.from_series([s1, s2])
