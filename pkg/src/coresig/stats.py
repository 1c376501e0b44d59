"""Streaming per-interaction statistics and NRF packet-length histograms.

Everything here is single-pass: accumulators fold one record at a time,
so the same code path serves batch files and live streams, and two
partial accumulations merge into exactly what a single pass over the
concatenated stream would produce (up to floating-point rounding).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from coresig.model import (
    NF_ORDER,
    InteractionKey,
    NfKind,
    PacketRecord,
    StatsMatrix,
)

__all__ = [
    "MatrixAccumulator",
    "AnalysisAccumulator",
    "build_matrix",
    "summary_grids",
    "HistDirection",
    "Histogram",
    "nrf_histograms",
    "peak_count",
]


class MatrixAccumulator:
    """Builds a :class:`StatsMatrix` incrementally from raw records.

    `add` applies core filtering itself: packets with an external
    endpoint or with src == dst are counted as filtered out and do not
    touch any cell.  Trace duration is the largest timestamp over all
    ingested records, filtered or not.
    """

    def __init__(self) -> None:
        self.matrix = StatsMatrix()

    def add(self, record: PacketRecord) -> bool:
        """Fold one record in; returns True when it updated a cell."""
        meta = self.matrix.meta
        meta.total_packets_ingested += 1
        if record.timestamp_us > meta.duration_us:
            meta.duration_us = record.timestamp_us
        if not record.is_core or record.src is record.dst:
            meta.total_packets_filtered_out += 1
            return False
        self.matrix.cells[InteractionKey(record.src, record.dst)].update(
            record.length_bytes
        )
        return True

    def snapshot(self) -> StatsMatrix:
        """An independent copy safe to finalize while ingestion continues."""
        return self.matrix.copy()


def build_matrix(records: Iterable[PacketRecord]) -> StatsMatrix:
    """One-shot matrix over records that are already core-filtered.

    Raises ``ValueError`` on a record that core filtering would drop;
    run :func:`coresig.ingest.filter_core` (or use
    :class:`MatrixAccumulator`, which filters as it goes) first.
    """
    acc = MatrixAccumulator()
    for record in records:
        if not acc.add(record):
            raise ValueError(
                f"record not core-to-core traffic: {record.src} -> {record.dst}"
            )
    return acc.matrix


def summary_grids(
    matrix: StatsMatrix, sample: bool = False
) -> dict[str, list[list[float]]]:
    """Finalize the matrix into four 10x10 grids keyed mean/max/stddev/count.

    Rows are sources and columns destinations, both in standard axis
    order.  ``sample`` picks the n-1 standard deviation form.
    """
    grids: dict[str, list[list[float]]] = {
        "mean": [],
        "max": [],
        "stddev": [],
        "count": [],
    }
    for src in NF_ORDER:
        mean_row: list[float] = []
        max_row: list[float] = []
        std_row: list[float] = []
        count_row: list[float] = []
        for dst in NF_ORDER:
            summary = matrix.cell(src, dst).finalize(sample=sample)
            mean_row.append(summary.mean)
            max_row.append(summary.max)
            std_row.append(summary.stddev)
            count_row.append(summary.count)
        grids["mean"].append(mean_row)
        grids["max"].append(max_row)
        grids["stddev"].append(std_row)
        grids["count"].append(count_row)
    return grids


# ---------------------------------------------------------------------------
# NRF packet-length histograms


class HistDirection(enum.Enum):
    """Which side of an NRF interaction a histogram covers."""

    SOURCE_NRF = "source_nrf"  # packets sent by the NRF to the peer
    DEST_NRF = "dest_nrf"  # packets sent by the peer to the NRF

    def __str__(self) -> str:
        return self.value


@dataclass
class Histogram:
    """Fixed-width packet-length histogram for one NRF peer and direction.

    Bins are sparse: ``bins[i]`` counts lengths in
    ``[i*bin_width, (i+1)*bin_width)``.
    """

    direction: HistDirection
    peer: NfKind
    bin_width: int = 16
    bins: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.bin_width < 1:
            raise ValueError(f"bin_width must be >= 1, got {self.bin_width}")

    def add(self, length_bytes: int) -> None:
        if length_bytes < 1:
            raise ValueError(f"non-positive packet length: {length_bytes}")
        index = length_bytes // self.bin_width
        self.bins[index] = self.bins.get(index, 0) + 1

    @property
    def total(self) -> int:
        return sum(self.bins.values())

    def copy(self) -> "Histogram":
        return Histogram(self.direction, self.peer, self.bin_width, dict(self.bins))


def nrf_histograms(
    records: Iterable[PacketRecord], bin_width: int = 16
) -> list[Histogram]:
    """Histograms of every NRF interaction present in the records.

    Returns one histogram per (direction, peer) pair that saw at least
    one core packet, ordered NRF-source first, then peers in axis order.
    """
    acc = AnalysisAccumulator(bin_width=bin_width)
    for record in records:
        acc.add(record)
    return acc.histograms()


def peak_count(
    histogram: Histogram,
    min_separation_bins: int = 4,
    min_mass_fraction: float = 0.05,
) -> int:
    """Count distinct modes of a histogram.

    A candidate peak is a local maximum over the dense bin range (a
    plateau of equal bins counts once, anchored at its middle).  A
    candidate qualifies when it carries at least ``min_mass_fraction``
    of the histogram's total mass; qualified peaks are then kept
    greedily by descending mass, discarding any within
    ``min_separation_bins`` bins of an already-kept peak (separation is
    inclusive: a gap of exactly ``min_separation_bins`` is far enough).
    """
    if min_separation_bins < 1:
        raise ValueError("min_separation_bins must be >= 1")
    if not 0 <= min_mass_fraction <= 1:
        raise ValueError("min_mass_fraction must be within [0, 1]")
    if not histogram.bins:
        raise ValueError("peak_count of an empty histogram is undefined")
    lo = min(histogram.bins)
    hi = max(histogram.bins)
    dense = [histogram.bins.get(i, 0) for i in range(lo, hi + 1)]
    total = sum(dense)

    candidates: list[tuple[int, int]] = []  # (mass, dense index)
    i = 0
    n = len(dense)
    while i < n:
        if dense[i] == 0:
            i += 1
            continue
        j = i
        while j + 1 < n and dense[j + 1] == dense[i]:
            j += 1
        left = dense[i - 1] if i > 0 else 0
        right = dense[j + 1] if j + 1 < n else 0
        if dense[i] > left and dense[i] > right:
            candidates.append((dense[i], (i + j) // 2))
        i = j + 1

    threshold = min_mass_fraction * total
    qualified = [(mass, idx) for mass, idx in candidates if mass >= threshold]
    qualified.sort(key=lambda peak: (-peak[0], peak[1]))
    kept: list[int] = []
    for _, idx in qualified:
        if all(abs(idx - other) >= min_separation_bins for other in kept):
            kept.append(idx)
    return len(kept)


class AnalysisAccumulator:
    """Matrix plus NRF histograms, updated together from one stream.

    This is the single ingestion path shared by batch analysis and the
    live pipeline, so a final live snapshot is bitwise-identical to a
    batch run over the same records.
    """

    def __init__(self, bin_width: int = 16):
        if bin_width < 1:
            raise ValueError(f"bin_width must be >= 1, got {bin_width}")
        self.bin_width = bin_width
        self.matrix_acc = MatrixAccumulator()
        self._hists: dict[tuple[HistDirection, NfKind], Histogram] = {}

    def _histogram(self, direction: HistDirection, peer: NfKind) -> Histogram:
        key = (direction, peer)
        hist = self._hists.get(key)
        if hist is None:
            hist = Histogram(direction, peer, self.bin_width)
            self._hists[key] = hist
        return hist

    def add(self, record: PacketRecord) -> bool:
        applied = self.matrix_acc.add(record)
        if applied:
            if record.src is NfKind.NRF:
                self._histogram(HistDirection.SOURCE_NRF, record.dst).add(
                    record.length_bytes
                )
            elif record.dst is NfKind.NRF:
                self._histogram(HistDirection.DEST_NRF, record.src).add(
                    record.length_bytes
                )
        return applied

    def histograms(self) -> list[Histogram]:
        """Copies of the populated histograms in deterministic order."""
        ordered = sorted(
            self._hists.values(),
            key=lambda h: (h.direction is not HistDirection.SOURCE_NRF,
                           NF_ORDER.index(h.peer)),
        )
        return [h.copy() for h in ordered]

    def snapshot(self) -> tuple[StatsMatrix, list[Histogram]]:
        return self.matrix_acc.snapshot(), self.histograms()
