import numpy as np
import pytest

from denselines import GridSpec, TimeSeries, column_counts
from denselines import rasterize_antialiased, rasterize_bresenham
from denselines.raster import bresenham_cells, clip_segment

from oracles import param_walk_cells


def cells_of_matrix(m):
    return sorted((c, int(r)) for c, (rows, _) in m.columns.items() for r in rows)


def series_through_cells(grid, cell_points):
    """A series whose samples sit at the centers of the given cells."""
    dt = (grid.t_max - grid.t_min) / grid.cols
    dv = (grid.v_max - grid.v_min) / grid.rows
    t = np.array([grid.t_min + (c + 0.5) * dt for c, _ in cell_points])
    v = np.array([grid.v_min + (r + 0.5) * dv for _, r in cell_points])
    return TimeSeries("s", t, v)


class TestBresenham:
    def test_horizontal_line(self, unit_grid):
        s = TimeSeries("s", np.array([0.0, 4.0]), np.array([2.5, 2.5]))
        m = rasterize_bresenham(s, unit_grid)
        assert cells_of_matrix(m) == [(0, 2), (1, 2), (2, 2), (3, 2)]
        assert np.all(m.to_dense()[m.to_dense() > 0] == 1.0)

    def test_unit_slope_diagonal(self, unit_grid):
        s = series_through_cells(unit_grid, [(0, 0), (3, 3)])
        m = rasterize_bresenham(s, unit_grid)
        assert cells_of_matrix(m) == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_steep_segment_exact_split(self):
        grid = GridSpec(2, 4, 0.0, 2.0, 0.0, 4.0)
        s = series_through_cells(grid, [(0, 0), (1, 3)])
        m = rasterize_bresenham(s, grid)
        assert cells_of_matrix(m) == [(0, 0), (0, 1), (1, 2), (1, 3)]

    def test_single_sample_marks_one_cell(self, unit_grid):
        s = TimeSeries("s", np.array([1.5]), np.array([2.5]))
        m = rasterize_bresenham(s, unit_grid)
        assert cells_of_matrix(m) == [(1, 2)]

    def test_revisits_stay_one(self, unit_grid):
        s = series_through_cells(unit_grid, [(0, 0), (1, 3), (2, 0), (3, 3)])
        m = rasterize_bresenham(s, unit_grid)
        dense = m.to_dense()
        assert dense.max() == 1.0
        assert set(np.unique(dense)) == {0.0, 1.0}

    def test_out_of_range_series_is_empty(self, unit_grid):
        s = TimeSeries("s", np.array([0.5, 3.5]), np.array([9.0, 9.5]))
        m = rasterize_bresenham(s, unit_grid)
        assert m.columns == {}

    def test_clipped_segment_reaches_boundary_cells(self):
        # line from below the grid to above it: clipped ends must sit on the
        # bottom and top rows, and the visited columns must not bend
        grid = GridSpec(8, 8, 0.0, 8.0, 0.0, 8.0)
        s = TimeSeries("s", np.array([1.0, 7.0]), np.array([-4.0, 12.0]))
        m = rasterize_bresenham(s, grid)
        cells = cells_of_matrix(m)
        rows_touched = [r for _, r in cells]
        assert 0 in rows_touched and 7 in rows_touched
        dense = m.to_dense()
        touched_cols = np.flatnonzero(dense.any(axis=1))
        assert np.array_equal(touched_cols, np.arange(touched_cols[0], touched_cols[-1] + 1))

    def test_zoom_window_matches_full_geometry(self):
        # rasterizing into a sub-window equals intersecting the full raster
        full = GridSpec(16, 16, 0.0, 16.0, 0.0, 16.0)
        window = GridSpec(8, 8, 4.0, 12.0, 4.0, 12.0)
        rng = np.random.default_rng(5)
        t = np.sort(rng.uniform(0, 16, 12))
        t[0], t[-1] = 0.0, 16.0
        v = rng.uniform(0, 16, 12)
        s = TimeSeries("s", t, v)
        m = rasterize_bresenham(s, window)
        for c, r in cells_of_matrix(m):
            assert 0 <= c < 8 and 0 <= r < 8

    def test_cell_count_formula(self, rng):
        for _ in range(300):
            c0, r0 = rng.integers(0, 64, 2)
            dc = rng.integers(0, 64)
            dr = rng.integers(-64, 65)
            cells = bresenham_cells(int(c0), int(r0), int(c0 + dc), int(r0 + dr))
            assert len(cells) == max(dc, abs(dr)) + 1
            assert len(set(cells)) == len(cells)

    def test_column_range_matches_parametric_oracle(self, rng):
        for _ in range(200):
            c0, r0 = (int(x) for x in rng.integers(0, 32, 2))
            c1 = c0 + int(rng.integers(0, 48))
            r1 = r0 + int(rng.integers(-48, 49))
            cells = bresenham_cells(c0, r0, c1, r1)
            oracle = param_walk_cells(c0, r0, c1, r1)
            assert {c for c, _ in cells} == {c for c, _ in oracle}
            # per column, our rows stay within the walk's row range
            for col in {c for c, _ in cells}:
                ours = [r for c, r in cells if c == col]
                walk = [r for c, r in oracle if c == col]
                assert min(ours) >= min(walk) and max(ours) <= max(walk)

    def test_touched_columns_contiguous(self, rng):
        for _ in range(100):
            c0, r0 = (int(x) for x in rng.integers(0, 20, 2))
            c1 = c0 + int(rng.integers(0, 40))
            r1 = r0 + int(rng.integers(-40, 41))
            cols = sorted({c for c, _ in bresenham_cells(c0, r0, c1, r1)})
            assert cols == list(range(c0, c1 + 1))

    def test_collinear_densification_invariance(self, unit_grid):
        # inserting a midpoint sample on an axis-aligned or unit-slope line
        # must not change the binary rasterization
        for pts in ([(0, 2), (3, 2)], [(0, 0), (3, 3)], [(1, 3), (1, 3)]):
            base = series_through_cells(unit_grid, pts)
            mid_t = (base.t[0] + base.t[-1]) / 2
            mid_v = (base.v[0] + base.v[-1]) / 2
            dense_t = np.sort(np.append(base.t, mid_t))
            order = np.argsort(np.append(base.t, mid_t), kind="stable")
            dense_v = np.append(base.v, mid_v)[order]
            densified = TimeSeries("d", dense_t, dense_v)
            a = rasterize_bresenham(base, unit_grid)
            b = rasterize_bresenham(densified, unit_grid)
            assert cells_of_matrix(a) == cells_of_matrix(b)

    def test_max_gap_breaks_line(self, unit_grid):
        s = TimeSeries("s", np.array([0.1, 0.2, 3.8]), np.array([0.5, 0.7, 0.6]))
        whole = rasterize_bresenham(s, unit_grid)
        broken = rasterize_bresenham(s, unit_grid, max_gap=1.0)
        assert len(cells_of_matrix(broken)) < len(cells_of_matrix(whole))
        assert cells_of_matrix(broken) == [(0, 0), (3, 0)]


class TestClipSegment:
    def test_inside_unchanged_bitwise(self):
        out = clip_segment(0.25, 0.75, 3.5, 2.5, 4, 4)
        assert out == (0.25, 0.75, 3.5, 2.5)

    def test_fully_outside(self):
        assert clip_segment(-3.0, -1.0, -1.0, -2.0, 4, 4) is None
        assert clip_segment(1.0, 5.0, 3.0, 6.0, 4, 4) is None

    def test_crossing_bottom(self):
        out = clip_segment(1.0, -1.0, 1.0, 2.0, 4, 4)
        assert out is not None
        xa, ya, xb, yb = out
        assert ya == 0.0 and (xb, yb) == (1.0, 2.0)

    def test_matches_vectorized(self, rng):
        from denselines._kernel import clip_arrays

        xa = rng.uniform(-6, 10, 500)
        ya = rng.uniform(-6, 10, 500)
        xb = xa + rng.uniform(0, 8, 500)
        yb = rng.uniform(-6, 10, 500)
        cxa, cya, cxb, cyb, ok = clip_arrays(xa, ya, xb, yb, 4, 4)
        for i in range(500):
            scalar = clip_segment(xa[i], ya[i], xb[i], yb[i], 4, 4)
            if scalar is None:
                assert not ok[i]
            else:
                assert ok[i]
                assert scalar == (cxa[i], cya[i], cxb[i], cyb[i])


class TestAntialiased:
    def test_center_aligned_equals_binary(self, unit_grid):
        s = TimeSeries("s", np.array([0.5, 3.5]), np.array([2.5, 2.5]))
        aa = rasterize_antialiased(s, unit_grid)
        binary = rasterize_bresenham(s, unit_grid)
        np.testing.assert_array_equal(aa.to_dense(), binary.to_dense())

    def test_line_between_rows_splits_half_half(self, unit_grid):
        s = TimeSeries("s", np.array([0.5, 3.5]), np.array([2.0, 2.0]))
        aa = rasterize_antialiased(s, unit_grid)
        dense = aa.to_dense()
        for col in range(4):
            assert dense[col, 1] == pytest.approx(0.5)
            assert dense[col, 2] == pytest.approx(0.5)

    def test_slope_half_column_split(self):
        grid = GridSpec(3, 2, 0.0, 3.0, 0.0, 2.0)
        s = series_through_cells(grid, [(0, 0), (2, 1)])
        aa = rasterize_antialiased(s, grid)
        dense = aa.to_dense()
        assert dense[0, 0] == 1.0
        assert dense[1, 0] == pytest.approx(0.5)
        assert dense[1, 1] == pytest.approx(0.5)
        assert dense[2, 1] == 1.0

    def test_weights_in_unit_interval(self, rng):
        grid = GridSpec(12, 12, 0.0, 1.0, -4.0, 4.0)
        for i in range(20):
            t = np.sort(rng.uniform(0, 1, 10))
            t[0], t[-1] = 0.0, 1.0
            v = rng.uniform(-4, 4, 10)
            aa = rasterize_antialiased(TimeSeries("s", t, v), grid)
            dense = aa.to_dense()
            assert dense.min() >= 0.0
            assert dense.max() <= 1.0 + 1e-12

    def test_step_weights_sum_to_one_before_clipping(self, rng):
        from denselines.raster import _aa_segment_steps

        for _ in range(50):
            # strictly interior segments: no cells are clipped away
            xa = rng.uniform(10, 900)
            ya = rng.uniform(10, 900)
            xb = xa + rng.uniform(0.1, 5)
            yb = ya + rng.uniform(-5, 5)
            for step in _aa_segment_steps(xa, ya, xb, yb, 1000, 1000):
                assert sum(w for _, w in step) == pytest.approx(1.0, abs=1e-12)

    def test_full_span_series_touches_every_column(self, rng):
        # short steep wiggles must not leave column gaps
        grid = GridSpec(40, 40, 0.0, 1.0, 0.0, 1.0)
        for _ in range(10):
            t = np.sort(rng.uniform(0, 1, 200))
            t[0], t[-1] = 0.0, 1.0
            v = 0.5 + 0.45 * np.sin(rng.uniform(20, 60) * t + rng.uniform(0, 6))
            aa = rasterize_antialiased(TimeSeries("s", t, v), grid)
            assert sorted(aa.columns) == list(range(40))

    def test_revisit_keeps_maximum(self, unit_grid):
        # two passes through the same columns at the same height: weights must
        # not accumulate beyond a single line's coverage
        s = series_through_cells(unit_grid, [(0, 1), (3, 1), (3, 3)])
        # drop back down through the same cells
        t = np.array([0.5, 1.5, 2.5, 3.2, 3.8])
        v = np.array([1.5, 1.5, 1.5, 3.5, 1.5])
        aa = rasterize_antialiased(TimeSeries("s", t, v), unit_grid)
        assert aa.to_dense().max() <= 1.0 + 1e-12


class TestColumnCounts:
    def test_horizontal_counts(self, unit_grid):
        s = TimeSeries("s", np.array([0.0, 4.0]), np.array([2.5, 2.5]))
        counts = column_counts(rasterize_bresenham(s, unit_grid))
        assert counts.tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_steep_counts(self):
        grid = GridSpec(2, 4, 0.0, 2.0, 0.0, 4.0)
        s = series_through_cells(grid, [(0, 0), (1, 3)])
        counts = column_counts(rasterize_bresenham(s, grid))
        assert counts.tolist() == [2.0, 2.0]

    def test_empty_matrix_all_zero(self, unit_grid):
        s = TimeSeries("s", np.array([0.5, 3.5]), np.array([9.0, 9.5]))
        counts = column_counts(rasterize_bresenham(s, unit_grid))
        assert counts.tolist() == [0.0, 0.0, 0.0, 0.0]
