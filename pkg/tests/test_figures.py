import pytest

from coresig.figures import HeatmapSpec, render_heatmap, render_histogram
from coresig.model import NfKind
from coresig.stats import HistDirection, Histogram


def tiny_grid(value=0.0):
    return [[value] * 10 for _ in range(10)]


def spec(**overrides):
    params = dict(title="packet count", grid=tiny_grid(), scale="linear")
    params.update(overrides)
    return HeatmapSpec(**params)


class TestHeatmapSpec:
    def test_grid_shape_must_match_labels(self):
        with pytest.raises(ValueError, match="10x10"):
            spec(grid=[[1.0] * 10 for _ in range(9)])
        with pytest.raises(ValueError, match="10x10"):
            spec(grid=[[1.0] * 9 for _ in range(10)])

    def test_unknown_scale_rejected(self):
        with pytest.raises(ValueError, match="unknown scale"):
            spec(scale="log2")

    def test_custom_axis_labels_resize_the_grid(self):
        HeatmapSpec(title="t", grid=[[1.0, 2.0], [3.0, 4.0]],
                    axis_labels=("a", "b"))


class TestRenderHeatmap:
    def test_produces_svg_bytes(self):
        grid = tiny_grid()
        grid[1][0] = 12.5
        data = render_heatmap(spec(grid=grid))
        assert data.startswith(b"<?xml")
        assert b"<svg" in data

    def test_same_spec_same_bytes(self):
        grid = tiny_grid()
        grid[0][3] = 7.0
        grid[4][4] = 2.25
        first = render_heatmap(spec(grid=grid, colorbar_label="bytes"))
        second = render_heatmap(spec(grid=grid, colorbar_label="bytes"))
        assert first == second

    def test_different_grid_different_bytes(self):
        lhs = tiny_grid()
        rhs = tiny_grid()
        rhs[2][2] = 99.0
        assert render_heatmap(spec(grid=lhs)) != render_heatmap(spec(grid=rhs))

    def test_log_scale_rejects_negative_values(self):
        grid = tiny_grid()
        grid[0][0] = -1.0
        with pytest.raises(ValueError, match="non-negative"):
            render_heatmap(spec(grid=grid, scale="log10"))

    def test_log_scale_renders_zero_heavy_grids(self):
        grid = tiny_grid()
        grid[1][0] = 100_000.0
        data = render_heatmap(spec(grid=grid, scale="log10"))
        assert data.startswith(b"<?xml")

    def test_flat_grid_renders_single_tick(self):
        data = render_heatmap(spec(grid=tiny_grid(3.0)))
        assert data.startswith(b"<?xml")

    def test_integer_values_grid_renders(self):
        grid = tiny_grid()
        grid[0][1] = 3.0
        grid[5][5] = 1.0
        data = render_heatmap(spec(grid=grid, integer_values=True,
                                   colorbar_label="cluster"))
        assert data.startswith(b"<?xml")


class TestRenderHistogram:
    def test_same_histogram_same_bytes(self):
        hist = Histogram(HistDirection.SOURCE_NRF, NfKind.UDM,
                         bin_width=16, bins={6: 40, 10: 25})
        assert render_histogram(hist) == render_histogram(hist)

    def test_empty_histogram_renders_placeholder(self):
        hist = Histogram(HistDirection.DEST_NRF, NfKind.BSF, bin_width=16)
        data = render_histogram(hist)
        assert data.startswith(b"<?xml")

    def test_custom_title_changes_output(self):
        hist = Histogram(HistDirection.SOURCE_NRF, NfKind.UDM,
                         bin_width=16, bins={6: 40})
        assert render_histogram(hist) != render_histogram(hist, title="other")
