"""Figure rendering: interaction heatmaps and length histograms as SVG.

Rendering is byte-deterministic so report trees can be compared by
hash: figures are drawn on explicit ``Figure`` objects (no pyplot
global state), the SVG id salt is pinned, and the volatile Date
metadata is stripped.  Given equal inputs, equal bytes come out —
across processes and runs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from coresig.model import NF_ORDER
from coresig.stats import Histogram

__all__ = ["HeatmapSpec", "render_heatmap", "render_histogram"]

_SVG_RC = {
    "svg.hashsalt": "coresig",
    "svg.fonttype": "path",
}

_NF_LABELS = tuple(nf.value for nf in NF_ORDER)


def _new_figure(figsize: tuple[float, float]) -> Figure:
    fig = Figure(figsize=figsize, dpi=100)
    FigureCanvasSVG(fig)  # attach a real canvas so layout can measure text
    return fig


def _save_svg(fig: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


@dataclass(frozen=True)
class HeatmapSpec:
    """A square annotated grid ready to render.

    ``scale`` is ``"linear"`` or ``"log10"``; the latter displays
    ``log10(1 + value)`` (requires non-negative values), which keeps
    zero cells at zero while spreading heavy-tailed counts.
    ``integer_values`` marks grids of small discrete values (cluster
    labels) so the colorbar ticks sit on the integers.
    """

    title: str
    grid: Sequence[Sequence[float]]
    scale: str = "linear"
    colorbar_label: str = ""
    integer_values: bool = False
    axis_labels: Sequence[str] = field(default=_NF_LABELS)

    def __post_init__(self) -> None:
        n = len(self.axis_labels)
        if len(self.grid) != n or any(len(row) != n for row in self.grid):
            raise ValueError(f"grid must be {n}x{n} to match the axis labels")
        if self.scale not in ("linear", "log10"):
            raise ValueError(f"unknown scale: {self.scale!r}")


def render_heatmap(spec: HeatmapSpec) -> bytes:
    """Render a heatmap with NF axis labels and a 6-step numeric colorbar."""
    values = np.asarray(spec.grid, dtype=np.float64)
    if spec.scale == "log10":
        if (values < 0).any():
            raise ValueError("log10 scale requires non-negative values")
        display = np.log10(1.0 + values)
        colorbar_label = (spec.colorbar_label + " " if spec.colorbar_label else "")
        colorbar_label += "[log10(1 + x)]"
    else:
        display = values
        colorbar_label = spec.colorbar_label

    n = len(spec.axis_labels)
    fig = _new_figure((7.4, 6.2))
    ax = fig.add_subplot(111)
    image = ax.imshow(display, cmap="viridis", interpolation="nearest")
    ax.set_xticks(range(n))
    ax.set_xticklabels(spec.axis_labels, rotation=45, ha="right")
    ax.set_yticks(range(n))
    ax.set_yticklabels(spec.axis_labels)
    ax.set_xlabel("destination")
    ax.set_ylabel("source")
    ax.set_title(spec.title)

    low = float(display.min())
    high = float(display.max())
    if spec.integer_values:
        top = int(round(float(values.max())))
        ticks = list(range(0, top + 1))
    elif high > low:
        ticks = list(np.linspace(low, high, 6))
    else:
        ticks = [low]
    colorbar = fig.colorbar(image, ax=ax, ticks=ticks)
    colorbar.ax.set_yticklabels([f"{t:.3g}" for t in ticks])
    if colorbar_label:
        colorbar.set_label(colorbar_label)
    fig.tight_layout()
    return _save_svg(fig)


def render_histogram(histogram: Histogram, title: Optional[str] = None) -> bytes:
    """Render one packet-length histogram as bars over byte ranges.

    An empty histogram renders as an empty frame rather than failing,
    so a report over a sparse trace still produces its full figure set.
    """
    fig = _new_figure((7.0, 4.6))
    ax = fig.add_subplot(111)
    width = histogram.bin_width
    if histogram.bins:
        indices = sorted(histogram.bins)
        lefts = [i * width for i in indices]
        counts = [histogram.bins[i] for i in indices]
        ax.bar(lefts, counts, width=width, align="edge",
               color="#3b6ea5", edgecolor="#1d3a57", linewidth=0.4)
        ax.set_xlim(0, (max(indices) + 2) * width)
    else:
        ax.set_xlim(0, 10 * width)
        ax.set_ylim(0, 1)
    ax.set_xlabel("packet length (bytes)")
    ax.set_ylabel("packets")
    if title is None:
        if histogram.direction.value == "source_nrf":
            title = f"NRF → {histogram.peer}"
        else:
            title = f"{histogram.peer} → NRF"
    ax.set_title(title)
    fig.tight_layout()
    return _save_svg(fig)
