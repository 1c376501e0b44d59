"""Report assembly: one analysis becomes one self-describing directory.

Layout written by :func:`write_report_tree`::

    out_dir/
      report.json          complete analysis results (single source of truth)
      stats/               mean.csv max.csv stddev.csv count.csv (10x10 grids)
      clusters/            k2.csv ... one label grid per clustered k
      histograms/          <direction>_<peer>.csv with bin_start,count rows
      figures/             SVG renderings of the grids and histograms
      manifest.json        sha256 + size of every other file, written last

Every artifact is generated from the ``report`` dict alone, so a tree
re-rendered from a saved ``report.json`` is byte-identical to the
original.  Floats in CSV cells use ``%.9g``, which round-trips the
printed value exactly (printing, parsing and re-printing is a fixed
point).  ``manifest.json`` is written only after everything else, so
its presence marks a complete, hash-verifiable tree.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from coresig.cluster import ClusterReport
from coresig.figures import HeatmapSpec, render_heatmap, render_histogram
from coresig.model import NF_ORDER, NfKind, StatsMatrix
from coresig.stats import (
    HistDirection,
    Histogram,
    peak_count,
    summary_grids,
)

__all__ = [
    "format_number",
    "build_report",
    "figure_files",
    "write_report_tree",
]

_STAT_TITLES = {
    "mean": "Mean packet length per interaction",
    "max": "Maximum packet length per interaction",
    "stddev": "Packet length standard deviation per interaction",
    "count": "Packet count per interaction",
}

_STAT_UNITS = {
    "mean": "bytes",
    "max": "bytes",
    "stddev": "bytes",
    "count": "packets",
}


def format_number(value: Union[int, float]) -> str:
    """Render a number for CSV cells: integers verbatim, floats as %.9g."""
    if isinstance(value, bool):  # bools are ints; reject rather than surprise
        raise TypeError("boolean is not a grid value")
    if isinstance(value, int):
        return str(value)
    return "%.9g" % value


def _grid_csv(grid: Iterable[Iterable[Union[int, float]]]) -> bytes:
    names = [nf.value for nf in NF_ORDER]
    lines = ["src," + ",".join(names)]
    for name, row in zip(names, grid):
        lines.append(name + "," + ",".join(format_number(v) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _histogram_csv(bins: Iterable[Iterable[int]]) -> bytes:
    lines = ["bin_start,count"]
    for bin_start, count in bins:
        lines.append(f"{bin_start},{count}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def build_report(
    matrix: StatsMatrix,
    histograms: Iterable[Histogram],
    cluster_reports: Iterable[ClusterReport],
    *,
    sample: bool = False,
    peak_separation_bins: int = 4,
    peak_mass_fraction: float = 0.05,
) -> dict:
    """Assemble the complete analysis into one JSON-serializable dict."""
    grids = summary_grids(matrix, sample=sample)
    hist_entries = []
    for hist in histograms:
        bins = [[index * hist.bin_width, hist.bins[index]] for index in sorted(hist.bins)]
        hist_entries.append({
            "direction": hist.direction.value,
            "peer": hist.peer.value,
            "bin_width": hist.bin_width,
            "total": hist.total,
            "peak_count": peak_count(
                hist,
                min_separation_bins=peak_separation_bins,
                min_mass_fraction=peak_mass_fraction,
            ),
            "bins": bins,
        })
    cluster_entries = []
    k_values = []
    restarts = seed = None
    scaling = None
    for rep in cluster_reports:
        k_values.append(rep.k)
        restarts, seed, scaling = rep.restarts, rep.seed, rep.scaling
        cluster_entries.append({
            "k": rep.k,
            "inertia": rep.inertia,
            "centroids": [list(c) for c in rep.centroids],
            "labels": rep.label_grid(),
            "merged": rep.merged,
        })
    return {
        "meta": {
            "duration_us": matrix.meta.duration_us,
            "total_packets_ingested": matrix.meta.total_packets_ingested,
            "total_packets_filtered_out": matrix.meta.total_packets_filtered_out,
            "stddev_form": "sample" if sample else "population",
            "nf_order": [nf.value for nf in NF_ORDER],
        },
        "params": {
            "k_values": k_values,
            "restarts": restarts,
            "seed": seed,
            "scaling": scaling,
            "peak_separation_bins": peak_separation_bins,
            "peak_mass_fraction": peak_mass_fraction,
        },
        "stats": grids,
        "histograms": hist_entries,
        "clustering": cluster_entries,
    }


def figure_files(report: Mapping) -> list[tuple[str, bytes]]:
    """Render every figure of a report from its dict form.

    Operating on the dict (rather than live objects) guarantees that
    re-rendering from a saved ``report.json`` reproduces the original
    SVG bytes.
    """
    files: list[tuple[str, bytes]] = []
    for name in ("mean", "max", "stddev", "count"):
        spec = HeatmapSpec(
            title=_STAT_TITLES[name],
            grid=report["stats"][name],
            scale="log10" if name == "count" else "linear",
            colorbar_label=_STAT_UNITS[name],
        )
        files.append((f"figures/{name}.svg", render_heatmap(spec)))
    for entry in report["clustering"]:
        spec = HeatmapSpec(
            title=f"Interaction clusters (k={entry['k']})",
            grid=entry["labels"],
            scale="linear",
            colorbar_label="cluster",
            integer_values=True,
        )
        files.append((f"figures/clusters_k{entry['k']}.svg", render_heatmap(spec)))
    for entry in report["histograms"]:
        width = entry["bin_width"]
        hist = Histogram(
            direction=HistDirection(entry["direction"]),
            peer=NfKind.parse(entry["peer"]),
            bin_width=width,
            bins={start // width: count for start, count in entry["bins"]},
        )
        files.append((
            f"figures/hist_{entry['direction']}_{entry['peer']}.svg",
            render_histogram(hist),
        ))
    return files


def write_report_tree(
    out_dir: Union[str, Path],
    report: Mapping,
    with_figures: bool = True,
) -> dict:
    """Write the full report directory; returns the manifest dict.

    Existing files at the same paths are overwritten, so repeated
    snapshots into one directory always leave the latest complete tree.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    files: dict[str, bytes] = {}
    for name in ("mean", "max", "stddev", "count"):
        files[f"stats/{name}.csv"] = _grid_csv(report["stats"][name])
    for entry in report["clustering"]:
        files[f"clusters/k{entry['k']}.csv"] = _grid_csv(entry["labels"])
    for entry in report["histograms"]:
        path = f"histograms/{entry['direction']}_{entry['peer']}.csv"
        files[path] = _histogram_csv(entry["bins"])
    if with_figures:
        for path, payload in figure_files(report):
            files[path] = payload
    files["report.json"] = (
        json.dumps(report, sort_keys=True, indent=2) + "\n"
    ).encode("utf-8")

    for rel_path, payload in files.items():
        target = out / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)

    manifest = {
        "files": [
            {
                "path": rel_path,
                "bytes": len(payload),
                "sha256": hashlib.sha256(payload).hexdigest(),
            }
            for rel_path, payload in sorted(files.items())
        ]
    }
    (out / "manifest.json").write_bytes(
        (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode("utf-8")
    )
    return manifest
