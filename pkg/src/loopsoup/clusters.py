"""
Clusters of loops under the shared-vertex relation.

Two loops are in the same cluster when a chain of loops joins them, each
consecutive pair visiting a common vertex. Crossing paths on Z^2 always share
a vertex, so no edge-level test is needed.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, NamedTuple, Set

import numpy as np

from . import _core
from .geometry import HORIZONTAL, VERTICAL, RealRect, Segment, vertices_in_rect
from .sampler import LoopSoup


def occupancy_map(soup: LoopSoup) -> Dict[tuple, Set[int]]:
    """Map each visited vertex to the indices of the loops visiting it."""
    occ = defaultdict(set)
    for (x, y), l in zip(soup.coords.tolist(), soup.loop_index().tolist()):
        occ[(x, y)].add(l)
    return dict(occ)


def _grid_coords(soup: LoopSoup):
    c = soup.coords
    x0, y0 = c[:, 0].min(), c[:, 1].min()
    gx = np.ascontiguousarray(c[:, 0] - x0)
    gy = np.ascontiguousarray(c[:, 1] - y0)
    return gx, gy, int(gx.max()) + 1, int(gy.max()) + 1


@dataclass(frozen=True)
class ClusterPartition:
    """Partition of a soup's loops into clusters.

    Cluster ids are ``0, 1, ...`` in order of each cluster's smallest loop
    index, so they depend only on the ordered soup.

    Attributes
    ----------
    labels : ndarray of int, shape (n_loops,)
    loop_count, vertex_count, diameter : ndarray, shape (n_clusters,)
    bbox : ndarray, shape (n_clusters, 4)
        ``(x_min, x_max, y_min, y_max)`` of each cluster's vertices.
    """

    labels: np.ndarray
    loop_count: np.ndarray
    vertex_count: np.ndarray
    bbox: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.loop_count)

    @property
    def diameter(self) -> np.ndarray:
        b = self.bbox
        return np.maximum(b[:, 1] - b[:, 0], b[:, 3] - b[:, 2])

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cid)

    def same_cluster(self, loops) -> bool:
        loops = np.asarray(list(loops), dtype=np.int64)
        return len(loops) == 0 or bool(np.all(self.labels[loops] == self.labels[loops[0]]))


def canonical_labels(rep: np.ndarray) -> np.ndarray:
    """Relabel representatives as 0, 1, ... by first appearance."""
    _, first, inv = np.unique(rep, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv]


def build_clusters(soup: LoopSoup) -> ClusterPartition:
    """Cluster the loops of ``soup`` with union-find (union by size, path compression)."""
    n = len(soup)
    if n == 0:
        z = np.zeros(0, dtype=np.int64)
        return ClusterPartition(z, z, z, np.zeros((0, 4), dtype=np.int64))
    gx, gy, w, h = _grid_coords(soup)
    rep = _core.cluster_loops(gx, gy, soup.offsets, np.ones(n, dtype=np.bool_), w, h)
    labels = canonical_labels(rep)
    k = int(labels.max()) + 1
    loop_count = np.bincount(labels, minlength=k)

    row_label = labels[soup.loop_index()]
    vid = gx * h + gy
    uniq, first = np.unique(vid, return_index=True)
    vertex_count = np.bincount(row_label[first], minlength=k)

    bl = soup.bboxes()
    bbox = np.empty((k, 4), dtype=np.int64)
    bbox[:, 0] = np.iinfo(np.int64).max
    bbox[:, 2] = np.iinfo(np.int64).max
    bbox[:, 1] = np.iinfo(np.int64).min
    bbox[:, 3] = np.iinfo(np.int64).min
    np.minimum.at(bbox[:, 0], labels, bl[:, 0])
    np.maximum.at(bbox[:, 1], labels, bl[:, 1])
    np.minimum.at(bbox[:, 2], labels, bl[:, 2])
    np.maximum.at(bbox[:, 3], labels, bl[:, 3])
    return ClusterPartition(labels, loop_count, vertex_count, bbox)


def segment_hits(soup: LoopSoup, seg: Segment, N: int = 1) -> np.ndarray:
    """Per-loop flag: the loop visits a vertex on the scaled segment."""
    n = len(soup)
    if n == 0:
        return np.zeros(0, dtype=bool)
    b = soup.bboxes()
    line, lo, hi = N * seg.line, N * seg.a, N * seg.b
    if seg.orientation == VERTICAL:
        cand = (b[:, 0] <= line) & (line <= b[:, 1]) & (b[:, 3] > lo) & (b[:, 2] < hi)
        on, along = 0, 1
    else:
        cand = (b[:, 2] <= line) & (line <= b[:, 3]) & (b[:, 1] > lo) & (b[:, 0] < hi)
        on, along = 1, 0
    if not cand.any():
        return np.zeros(n, dtype=bool)
    c = soup.coords
    row = (c[:, on] == line) & (c[:, along] > lo) & (c[:, along] < hi)
    return np.logical_or.reduceat(row, soup.offsets[:-1]) & cand


def clusters_touching_segment(partition: ClusterPartition, soup: LoopSoup,
                              seg: Segment, N: int = 1) -> Set[int]:
    return set(np.unique(partition.labels[segment_hits(soup, seg, N)]).tolist())


def side_flags(soup: LoopSoup, rect: RealRect, N: int = 1, direction: str = HORIZONTAL):
    """Per-loop flags: the loop visits the first / last column (row) of ``N * rect``.

    Only vertices strictly inside the scaled rectangle count; "first column"
    means ``x <= N * x_min + 1`` (resp. ``x >= N * x_max - 1``).
    """
    n = len(soup)
    if n == 0:
        z = np.zeros(0, dtype=bool)
        return z, z
    c = soup.coords
    inside = vertices_in_rect(c, rect, N)
    if direction == HORIZONTAL:
        lo = inside & (c[:, 0] <= N * rect.x_min + 1)
        hi = inside & (c[:, 0] >= N * rect.x_max - 1)
    elif direction == VERTICAL:
        lo = inside & (c[:, 1] <= N * rect.y_min + 1)
        hi = inside & (c[:, 1] >= N * rect.y_max - 1)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    starts = soup.offsets[:-1]
    return np.logical_or.reduceat(lo, starts), np.logical_or.reduceat(hi, starts)


def cluster_crosses_rect(partition: ClusterPartition, soup: LoopSoup, rect: RealRect,
                         N: int = 1, direction: str = HORIZONTAL) -> bool:
    """Whether a single cluster reaches both opposite sides of ``N * rect``."""
    if len(soup) == 0:
        return False
    lo, hi = side_flags(soup, rect, N, direction)
    return bool(set(partition.labels[lo].tolist()) & set(partition.labels[hi].tolist()))


def crossing_by_level(soup: LoopSoup, level: np.ndarray, n_levels: int, rect: RealRect,
                      N: int = 1, direction: str = HORIZONTAL) -> np.ndarray:
    """Crossing indicator for each nested sub-soup ``{loops with level <= j}``.

    Loops are merged incrementally, so a whole intensity sweep costs one
    union-find pass. ``level`` must be non-decreasing along the soup.
    """
    level = np.asarray(level, dtype=np.int64)
    if len(soup) == 0:
        return np.zeros(n_levels, dtype=bool)
    if np.any(np.diff(level) < 0):
        raise ValueError("loops must be sorted by level")
    lo, hi = side_flags(soup, rect, N, direction)
    gx, gy, w, h = _grid_coords(soup)
    return _core.crossing_by_level(gx, gy, soup.offsets, level, n_levels, lo, hi, w, h)


class ClusterStats(NamedTuple):
    loop_count: int
    vertex_count: int
    diameter: int
    cluster_id: int


def largest_cluster_stats(partition: ClusterPartition, soup: LoopSoup = None) -> ClusterStats:
    """Statistics of the cluster with most vertices (smallest id on ties)."""
    if partition.n_clusters == 0:
        return ClusterStats(0, 0, 0, -1)
    cid = int(np.argmax(partition.vertex_count))
    return ClusterStats(int(partition.loop_count[cid]), int(partition.vertex_count[cid]),
                        int(partition.diameter[cid]), cid)
