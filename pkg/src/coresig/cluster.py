"""Interaction characterization by k-means over per-pair traffic features.

Each directed interaction becomes one feature vector
``(mean, max, stddev, count)`` of its packet lengths, scaled per
feature, then clustered with Lloyd's algorithm for a range of k.  The
implementation is self-contained (no library clustering) because its
exact tie-breaking and restart behavior are part of the reproducibility
contract:

* initial centroids are k distinct feature vectors sampled per restart
  from a seed-derived substream,
* assignment breaks distance ties toward the lowest centroid index,
* an empty cluster seizes the point farthest from its assigned centroid,
* iteration stops when the largest centroid shift drops below 1e-9, or
  after 300 iterations,
* the best restart is the lowest inertia, ties to the earliest restart,
* final clusters are relabeled by ascending centroid count-feature (then
  the remaining features) so equal runs produce identical label grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from coresig.model import (
    NF_INDEX,
    NF_ORDER,
    InteractionKey,
    NfKind,
    StatsMatrix,
)
from coresig.rng import make_rng

__all__ = [
    "FEATURE_NAMES",
    "FeatureRow",
    "feature_rows",
    "scale_rows",
    "scale_features",
    "KMeansResult",
    "kmeans",
    "ClusterReport",
    "characterize",
]

FEATURE_NAMES = ("mean", "max", "stddev", "count")

_MAX_ITERATIONS = 300
_SHIFT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FeatureRow:
    """The feature vector of one interaction: raw, and scaled once
    :func:`scale_rows` has run."""

    key: InteractionKey
    raw: tuple[float, float, float, float]
    scaled: Optional[tuple[float, float, float, float]] = None


def feature_rows(
    matrix: StatsMatrix, sample: bool = False, merged: bool = False
) -> list[FeatureRow]:
    """Extract one row per interaction, in deterministic key order.

    Directed mode (default) yields all 100 ordered pairs.  Merged mode
    folds each pair of opposite directions into a single row keyed by
    the lower-index endpoint first (55 unordered pairs including the
    always-empty self-pairs).
    """
    rows: list[FeatureRow] = []
    if not merged:
        for src in NF_ORDER:
            for dst in NF_ORDER:
                summary = matrix.cell(src, dst).finalize(sample=sample)
                rows.append(FeatureRow(
                    InteractionKey(src, dst),
                    (summary.mean, float(summary.max), summary.stddev,
                     float(summary.count)),
                ))
        return rows
    for i, a in enumerate(NF_ORDER):
        for b in NF_ORDER[i:]:
            combined = matrix.cell(a, b).copy()
            if a is not b:
                combined.merge(matrix.cell(b, a))
            summary = combined.finalize(sample=sample)
            rows.append(FeatureRow(
                InteractionKey(a, b),
                (summary.mean, float(summary.max), summary.stddev,
                 float(summary.count)),
            ))
    return rows


def scale_rows(rows: Sequence[FeatureRow], method: str = "minmax") -> list[FeatureRow]:
    """Return rows with their ``scaled`` vectors filled in."""
    if not rows:
        raise ValueError("need at least one feature row to scale")
    scaled = scale_features(
        np.array([row.raw for row in rows], dtype=np.float64), method=method
    )
    return [
        FeatureRow(row.key, row.raw, tuple(float(v) for v in vector))
        for row, vector in zip(rows, scaled)
    ]


def scale_features(X: np.ndarray, method: str = "minmax") -> np.ndarray:
    """Scale each feature column independently.

    ``minmax`` maps a column's observed range onto [0, 1]; ``zscore``
    centers on the mean with unit standard deviation.  A column with no
    spread scales to all zeros in either mode (never a division by
    zero), which also makes min-max scaling idempotent.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature array, got shape {X.shape}")
    out = np.zeros_like(X)
    if X.size == 0:
        return out
    if method == "minmax":
        lows = X.min(axis=0)
        spans = X.max(axis=0) - lows
        nonzero = spans > 0
        out[:, nonzero] = (X[:, nonzero] - lows[nonzero]) / spans[nonzero]
        return out
    if method == "zscore":
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        nonzero = stds > 0
        out[:, nonzero] = (X[:, nonzero] - means[nonzero]) / stds[nonzero]
        return out
    raise ValueError(f"unknown scaling method: {method!r}")


class KMeansResult(NamedTuple):
    centroids: np.ndarray  # (k, n_features)
    labels: np.ndarray  # (n_points,) int64
    inertia: float


def _lloyd(points: np.ndarray, centroids: np.ndarray) -> KMeansResult:
    """Run Lloyd iterations from the given initial centroids."""
    n = len(points)
    k = len(centroids)
    point_index = np.arange(n)
    previous_inertia = np.inf
    for _ in range(_MAX_ITERATIONS):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)  # ties go to the lowest index
        assigned_d2 = d2[point_index, labels]
        inertia = float(assigned_d2.sum())
        if inertia > previous_inertia + 1e-9:
            raise RuntimeError(
                f"inertia increased during iteration: {previous_inertia} -> {inertia}"
            )
        previous_inertia = inertia
        new_centroids = np.empty_like(centroids)
        seizable = assigned_d2.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = points[members].mean(axis=0)
            else:
                # revive an empty cluster on the farthest point, without
                # letting two empty clusters seize the same one
                farthest = int(seizable.argmax())
                new_centroids[j] = points[farthest]
                seizable[farthest] = -1.0
        shift = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        if shift < _SHIFT_TOLERANCE:
            break
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[point_index, labels].sum())
    if inertia > previous_inertia + 1e-9:
        raise RuntimeError(
            f"inertia increased at final assignment: {previous_inertia} -> {inertia}"
        )
    return KMeansResult(centroids, labels, inertia)


def kmeans(
    points: Sequence[Sequence[float]] | np.ndarray,
    k: int,
    restarts: int = 16,
    seed: int = 0,
) -> KMeansResult:
    """Best-of-``restarts`` Lloyd's k-means with deterministic seeding.

    Requires ``k >= 2`` and at least k distinct points.  Identical
    points always share a label.  The returned clusters are relabeled
    canonically (ascending count feature, i.e. the last column, then the
    earlier columns) so the labeling is stable across equivalent runs.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"expected a 2-D point array, got shape {points.shape}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    distinct = np.unique(points, axis=0)
    if len(distinct) < k:
        raise ValueError(
            f"k={k} exceeds the {len(distinct)} distinct points available"
        )

    best: Optional[KMeansResult] = None
    for restart in range(restarts):
        rng = make_rng(seed, f"kmeans:{restart}")
        chosen = rng.sample(range(len(distinct)), k)
        initial = distinct[np.array(chosen)]
        result = _lloyd(points, initial.copy())
        if best is None or result.inertia < best.inertia:
            best = result
    assert best is not None

    # canonical relabeling: order clusters by the count feature, then the rest
    k_found = len(best.centroids)
    column_order = [best.centroids.shape[1] - 1] + list(
        range(best.centroids.shape[1] - 1)
    )
    order = sorted(
        range(k_found),
        key=lambda j: tuple(best.centroids[j][c] for c in column_order),
    )
    remap = np.empty(k_found, dtype=np.int64)
    for new_label, old_label in enumerate(order):
        remap[old_label] = new_label
    return KMeansResult(
        centroids=best.centroids[order].copy(),
        labels=remap[best.labels],
        inertia=best.inertia,
    )


@dataclass
class ClusterReport:
    """One clustering outcome over the interaction feature rows."""

    k: int
    restarts: int
    seed: int
    scaling: str
    merged: bool
    inertia: float
    centroids: list[tuple[float, ...]]  # in scaled feature space
    labels: dict[InteractionKey, int]

    def label_grid(self) -> list[list[int]]:
        """Labels as a 10x10 grid in axis order.

        In merged mode both directions of a pair carry the pair's label.
        """
        grid = [[0] * len(NF_ORDER) for _ in NF_ORDER]
        for key, label in self.labels.items():
            grid[NF_INDEX[key.src]][NF_INDEX[key.dst]] = label
            if self.merged:
                grid[NF_INDEX[key.dst]][NF_INDEX[key.src]] = label
        return grid


def characterize(
    matrix: StatsMatrix,
    k_values: Iterable[int] = range(2, 8),
    restarts: int = 16,
    seed: int = 0,
    scaling: str = "minmax",
    sample: bool = False,
    merged: bool = False,
) -> list[ClusterReport]:
    """Cluster the interaction features once per requested k.

    Features are extracted and scaled a single time; each k then runs
    its own multi-restart k-means over the same scaled matrix.  A k
    exceeding the number of distinct scaled rows propagates the
    :func:`kmeans` error.
    """
    rows = scale_rows(feature_rows(matrix, sample=sample, merged=merged), method=scaling)
    scaled = np.array([row.scaled for row in rows], dtype=np.float64)
    reports: list[ClusterReport] = []
    for k in k_values:
        result = kmeans(scaled, k, restarts=restarts, seed=seed)
        reports.append(ClusterReport(
            k=k,
            restarts=restarts,
            seed=seed,
            scaling=scaling,
            merged=merged,
            inertia=result.inertia,
            centroids=[tuple(float(v) for v in c) for c in result.centroids],
            labels={row.key: int(label) for row, label in zip(rows, result.labels)},
        ))
    return reports
