import numpy as np
import pytest

import oracles
from loopsoup.clusters import (build_clusters, canonical_labels, cluster_crosses_rect,
                               clusters_touching_segment, crossing_by_level,
                               largest_cluster_stats, occupancy_map)
from loopsoup.geometry import HORIZONTAL, VERTICAL, DiscreteLoop, RealRect, Region, Segment
from loopsoup.kernel import build_kernel, pointed_rates
from loopsoup.sampler import LoopSoup, sample_soup, sample_soup_coupled


def partition_sets(part):
    return {frozenset(np.flatnonzero(part.labels == c).tolist()) for c in range(part.n_clusters)}


def hline(x0, x1, y):
    """Back-and-forth loop along a horizontal segment."""
    path = [(x, y) for x in range(x0, x1 + 1)]
    return path + path[-2:0:-1]


def test_examples():
    a = [(0, 1), (1, 1)]
    b = [(1, 1), (1, 2)]
    c = [(1, 2), (2, 2)]
    assert build_clusters(LoopSoup.from_loops([a, b])).n_clusters == 1
    assert build_clusters(LoopSoup.from_loops([a, [(5, 1), (6, 1)]])).n_clusters == 2
    part = build_clusters(LoopSoup.from_loops([a, b, c]))
    assert part.n_clusters == 1 and part.loop_count.tolist() == [3]
    assert build_clusters(LoopSoup.from_loops([])).n_clusters == 0


def test_matches_brute_force_on_sampled_soups():
    rates = pointed_rates(build_kernel(Region.box(0, 12, 1, 8)))
    rng = np.random.default_rng(1)
    for s in range(100):
        soup = sample_soup(rates, float(rng.uniform(0.5, 4)), (s,))
        if len(soup) > 50:
            soup = soup.subset(np.sort(rng.choice(len(soup), 50, replace=False)))
        part = build_clusters(soup)
        assert partition_sets(part) == oracles.brute_clusters(soup.ranges())


def test_aggregates_recomputed():
    soup = sample_soup(pointed_rates(build_kernel(Region.box(0, 12, 1, 8))), 3.0, 4)
    part = build_clusters(soup)
    for c in range(part.n_clusters):
        members = part.members(c)
        verts = set().union(*(soup[i].range() for i in members))
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        assert part.vertex_count[c] == len(verts)
        assert part.bbox[c].tolist() == [min(xs), max(xs), min(ys), max(ys)]
        assert part.diameter[c] == max(max(xs) - min(xs), max(ys) - min(ys))


def test_ids_ordered_by_first_loop():
    part = build_clusters(LoopSoup.from_loops([[(5, 1), (6, 1)], [(0, 1), (1, 1)], [(6, 1), (6, 2)]]))
    assert part.labels.tolist() == [0, 1, 0]
    assert canonical_labels(np.array([7, 3, 7, 1])).tolist() == [0, 1, 0, 2]


def test_rooting_invariance_and_monotone_insertion():
    soup = sample_soup(pointed_rates(build_kernel(Region.box(0, 10, 1, 6))), 2.0, 9)
    base = build_clusters(soup)
    rerooted = LoopSoup.from_loops([l.rerooted(len(l) // 2) for l in soup], soup.region)
    assert np.array_equal(build_clusters(rerooted).labels, base.labels)
    for k in range(1, len(soup)):
        before = build_clusters(soup.subset(np.arange(k)))
        after = build_clusters(soup.subset(np.arange(k + 1)))
        assert after.n_clusters <= before.n_clusters + 1
        assert after.same_cluster([]) and all(
            after.same_cluster(before.members(c)) for c in range(before.n_clusters))


def test_occupancy_map():
    soup = LoopSoup.from_loops([[(0, 1), (1, 1)], [(1, 1), (1, 2)]])
    occ = occupancy_map(soup)
    assert occ[(1, 1)] == {0, 1} and occ[(0, 1)] == {0}


class TestSegments:
    def test_examples(self):
        seg = Segment(VERTICAL, 1, 1, 2)
        empty = LoopSoup.from_loops([])
        assert clusters_touching_segment(build_clusters(empty), empty, seg, 4) == set()
        soup = LoopSoup.from_loops([hline(2, 6, 6), [(20, 1), (21, 1)]])
        part = build_clusters(soup)
        assert clusters_touching_segment(part, soup, seg, 4) == {0}
        far = Segment(VERTICAL, 10, 1, 2)
        assert clusters_touching_segment(part, soup, far, 4) == set()


class TestCrossing:
    rect = RealRect(1, 5, 1, 2)

    def test_empty(self):
        soup = LoopSoup.from_loops([])
        assert not cluster_crosses_rect(build_clusters(soup), soup, self.rect, 4)

    def test_snake(self):
        soup = LoopSoup.from_loops([hline(4, 20, 6)])
        assert cluster_crosses_rect(build_clusters(soup), soup, self.rect, 4)
        assert not cluster_crosses_rect(build_clusters(soup), soup, self.rect, 4, VERTICAL)

    def test_two_halves(self):
        soup = LoopSoup.from_loops([hline(4, 11, 6), hline(13, 20, 6)])
        assert not cluster_crosses_rect(build_clusters(soup), soup, self.rect, 4)
        joined = LoopSoup.from_loops([hline(4, 11, 6), hline(13, 20, 6), hline(11, 13, 6)])
        assert cluster_crosses_rect(build_clusters(joined), joined, self.rect, 4)

    def test_bad_direction(self):
        soup = LoopSoup.from_loops([hline(4, 20, 6)])
        with pytest.raises(ValueError):
            cluster_crosses_rect(build_clusters(soup), soup, self.rect, 4, "diagonal")

    def test_incremental_matches_rebuild(self):
        M = 12
        reg = Region.box(0, 2 * M, 1, M)
        rates = pointed_rates(build_kernel(reg))
        rect = RealRect(M / 2, 3 * M / 2, 0, M)
        alphas = np.array([0.5, 1.0, 2.0, 3.0, 5.0])
        for s in range(20):
            (top,) = sample_soup_coupled(rates, [alphas[-1]], s)
            level = np.searchsorted(alphas, top.marks, side="left")
            inc = crossing_by_level(top, level, len(alphas), rect, 1, HORIZONTAL)
            for j in range(len(alphas)):
                sub = top.subset(level <= j)
                assert inc[j] == cluster_crosses_rect(build_clusters(sub), sub, rect, 1)

    def test_level_order_enforced(self):
        soup = LoopSoup.from_loops([hline(4, 20, 6), hline(4, 6, 6)])
        with pytest.raises(ValueError):
            crossing_by_level(soup, np.array([1, 0]), 2, self.rect, 4)


class TestLargest:
    def test_empty(self):
        assert tuple(largest_cluster_stats(build_clusters(LoopSoup.from_loops([])))) == (0, 0, 0, -1)

    def test_single(self):
        loop = DiscreteLoop([(0, 1), (1, 1), (1, 2), (0, 2)])
        st = largest_cluster_stats(build_clusters(LoopSoup.from_loops([loop])))
        assert (st.loop_count, st.vertex_count, st.diameter) == (1, 4, 1)

    def test_tie_smallest_id(self):
        soup = LoopSoup.from_loops([[(5, 1), (6, 1)], [(0, 1), (1, 1)]])
        assert largest_cluster_stats(build_clusters(soup)).cluster_id == 0
