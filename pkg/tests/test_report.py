import hashlib
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coresig.cluster import characterize
from coresig.report import build_report, figure_files, format_number, write_report_tree


@pytest.fixture(scope="module")
def medium_report(medium_analysis):
    matrix, histograms = medium_analysis.snapshot()
    reports = characterize(matrix, k_values=range(2, 5))
    return build_report(matrix, histograms, reports)


class TestFormatNumber:
    def test_integers_stay_verbatim(self):
        assert format_number(0) == "0"
        assert format_number(171_821) == "171821"
        assert format_number(-3) == "-3"

    def test_floats_use_up_to_nine_significant_digits(self):
        assert format_number(216.02468994692867) == "216.02469"
        assert format_number(0.5) == "0.5"
        assert format_number(1e-12) == "1e-12"

    def test_bools_rejected(self):
        with pytest.raises(TypeError):
            format_number(True)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(allow_nan=False, allow_infinity=False, width=64))
    def test_print_parse_print_is_a_fixed_point(self, value):
        printed = format_number(value)
        assert format_number(float(printed)) == printed


class TestBuildReport:
    def test_meta_and_params_sections(self, medium_report, medium_config):
        meta = medium_report["meta"]
        # the observed span: at least the configured horizon, plus the
        # tail of the last admitted transaction
        assert meta["duration_us"] >= medium_config.duration_us
        assert meta["duration_us"] < medium_config.duration_us + 1_000_000
        assert meta["total_packets_filtered_out"] == 0
        assert meta["stddev_form"] == "population"
        assert meta["nf_order"][0] == "NRF"
        params = medium_report["params"]
        assert params["k_values"] == [2, 3, 4]
        assert params["scaling"] == "minmax"

    def test_grid_sections_are_ten_by_ten(self, medium_report):
        for name in ("mean", "max", "stddev", "count"):
            grid = medium_report["stats"][name]
            assert len(grid) == 10 and all(len(row) == 10 for row in grid)

    def test_histogram_entries_cover_both_directions(self, medium_report):
        entries = medium_report["histograms"]
        assert len(entries) == 18  # nine peers, two directions
        directions = {e["direction"] for e in entries}
        assert directions == {"source_nrf", "dest_nrf"}
        for entry in entries:
            assert entry["total"] == sum(count for _, count in entry["bins"])
            assert entry["peak_count"] >= 1
            starts = [start for start, _ in entry["bins"]]
            assert starts == sorted(starts)
            assert all(start % entry["bin_width"] == 0 for start in starts)

    def test_clustering_entries_match_requested_ks(self, medium_report):
        ks = [entry["k"] for entry in medium_report["clustering"]]
        assert ks == [2, 3, 4]
        for entry in medium_report["clustering"]:
            assert len(entry["centroids"]) == entry["k"]
            labels = entry["labels"]
            assert len(labels) == 10
            assert set(v for row in labels for v in row) == set(range(entry["k"]))

    def test_report_is_json_serializable(self, medium_report):
        encoded = json.dumps(medium_report, sort_keys=True)
        assert json.loads(encoded) == medium_report


class TestWriteReportTree:
    def test_layout_and_manifest(self, tmp_path, medium_report):
        out = tmp_path / "report"
        manifest = write_report_tree(out, medium_report, with_figures=False)

        expected = {"report.json",
                    "stats/mean.csv", "stats/max.csv",
                    "stats/stddev.csv", "stats/count.csv",
                    "clusters/k2.csv", "clusters/k3.csv", "clusters/k4.csv"}
        expected |= {
            f"histograms/{e['direction']}_{e['peer']}.csv"
            for e in medium_report["histograms"]
        }
        listed = {entry["path"] for entry in manifest["files"]}
        assert listed == expected
        assert "manifest.json" not in listed  # the manifest never lists itself

        # every listed file exists with matching size and digest
        for entry in manifest["files"]:
            payload = (out / entry["path"]).read_bytes()
            assert len(payload) == entry["bytes"]
            assert hashlib.sha256(payload).hexdigest() == entry["sha256"]

        paths = [entry["path"] for entry in manifest["files"]]
        assert paths == sorted(paths)

        on_disk = json.loads((out / "manifest.json").read_text())
        assert on_disk == manifest

    def test_figures_included_by_default(self, tmp_path, medium_report):
        out = tmp_path / "report"
        manifest = write_report_tree(out, medium_report)
        figure_paths = {e["path"] for e in manifest["files"]
                        if e["path"].startswith("figures/")}
        assert {"figures/mean.svg", "figures/max.svg", "figures/stddev.svg",
                "figures/count.svg"} <= figure_paths
        assert "figures/clusters_k2.svg" in figure_paths
        assert len([p for p in figure_paths if p.startswith("figures/hist_")]) == 18

    def test_grid_csv_rows_are_source_functions(self, tmp_path, medium_report):
        out = tmp_path / "report"
        write_report_tree(out, medium_report, with_figures=False)
        lines = (out / "stats" / "count.csv").read_text().splitlines()
        assert lines[0] == "src,NRF,AMF,SMF,AUSF,UDM,UDR,PCF,NSSF,BSF,UPF"
        assert len(lines) == 11
        assert lines[1].startswith("NRF,")
        # cell (AMF row, NRF column) is the AMF->NRF packet count
        amf_row = lines[2].split(",")
        assert amf_row[0] == "AMF"
        assert int(amf_row[1]) == medium_report["stats"]["count"][1][0]

    def test_histogram_csv_matches_report_bins(self, tmp_path, medium_report):
        out = tmp_path / "report"
        write_report_tree(out, medium_report, with_figures=False)
        entry = medium_report["histograms"][0]
        path = out / "histograms" / f"{entry['direction']}_{entry['peer']}.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_start,count"
        parsed = [[int(x) for x in line.split(",")] for line in lines[1:]]
        assert parsed == entry["bins"]

    def test_rebuild_from_saved_json_is_byte_identical(self, tmp_path,
                                                       medium_report):
        first = tmp_path / "first"
        manifest_a = write_report_tree(first, medium_report)
        reloaded = json.loads((first / "report.json").read_text())
        second = tmp_path / "second"
        manifest_b = write_report_tree(second, reloaded)
        assert manifest_a == manifest_b
        for entry in manifest_a["files"]:
            assert (first / entry["path"]).read_bytes() == (
                second / entry["path"]
            ).read_bytes()

    def test_overwrites_previous_snapshot(self, tmp_path, medium_report):
        out = tmp_path / "report"
        write_report_tree(out, medium_report, with_figures=False)
        write_report_tree(out, medium_report, with_figures=False)
        on_disk = json.loads((out / "report.json").read_text())
        assert on_disk == medium_report

    def test_count_figure_uses_log_scale(self, medium_report):
        # the count heatmap advertises its log transform in the SVG text
        rendered = dict(figure_files(medium_report))
        assert b"log10(1 + x)" not in rendered["figures/mean.svg"]
        # fonttype=path outlines text, so check the figure differs when the
        # scale differs: re-render the count grid linearly and compare
        from coresig.figures import HeatmapSpec, render_heatmap
        linear = render_heatmap(HeatmapSpec(
            title="Packet count per interaction",
            grid=medium_report["stats"]["count"],
            scale="linear",
            colorbar_label="packets",
        ))
        assert rendered["figures/count.svg"] != linear
        log10 = render_heatmap(HeatmapSpec(
            title="Packet count per interaction",
            grid=medium_report["stats"]["count"],
            scale="log10",
            colorbar_label="packets",
        ))
        assert rendered["figures/count.svg"] == log10
