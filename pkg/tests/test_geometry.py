import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from loopsoup.geometry import (HORIZONTAL, Q_EXT, Q_INT, VERTICAL, DiscreteLoop, RealRect,
                               Region, Segment, loop_contained, loop_diameter,
                               loop_hits_segment, rect_region, transform_rect,
                               transform_segment)


def _set(region):
    return set(region)


class TestRectRegion:
    def test_q_ext_unit(self):
        r = rect_region(Q_EXT, 1)
        assert _set(r) == {(x, y) for x in range(1, 6) for y in (1, 2)}
        assert len(r) == 10

    def test_q_int_unit_is_empty(self):
        assert len(rect_region(Q_INT, 1)) == 0

    def test_q_int_scale_two(self):
        assert _set(rect_region(Q_INT, 2)) == {(x, 3) for x in range(3, 10)}

    def test_half_plane_cut(self):
        r = rect_region(RealRect(-2, 2, -5, 2), 1)
        assert min(y for _, y in r) == 1

    @given(st.integers(-4, 4), st.integers(1, 4), st.integers(-4, 4), st.integers(1, 4),
           st.integers(1, 3))
    def test_monotone(self, x0, w, y0, h, N):
        small = RealRect(x0, x0 + w, y0, y0 + h)
        big = RealRect(x0 - 1, x0 + w + 1, y0, y0 + h + 1)
        assert rect_region(small, N).issubset(rect_region(big, N))

    @pytest.mark.parametrize("rect", [Q_EXT, Q_INT, RealRect(1, 2, 0, 3)])
    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_doubling(self, rect, N):
        a = rect_region(rect, N)
        b = _set(rect_region(rect, 2 * N))
        assert all((2 * x, 2 * y) in b for x, y in a)


class TestTransform:
    def test_rotate_ext(self):
        assert transform_rect(Q_EXT, True, (0, 0)) == RealRect(-3, 0, 0, 6)

    def test_translate_ext(self):
        assert transform_rect(Q_EXT, False, (3, 3)) == RealRect(3, 9, 3, 6)

    def test_rotate_then_translate_int(self):
        assert transform_rect(Q_INT, True, (6, 0)) == RealRect(4, 5, 1, 5)

    def test_segment_rotation_matches_points(self):
        seg = Segment(VERTICAL, 1, 1, 2)
        out = transform_segment(seg, True, (6, 0))
        # (1, y) -> (-y, 1) -> (6 - y, 1) for y in (1, 2)
        assert out == Segment(HORIZONTAL, 1, 4, 5)


class TestLoops:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteLoop([(0, 1), (2, 1)])
        with pytest.raises(ValueError):
            DiscreteLoop([(0, 1)])
        with pytest.raises(ValueError):
            DiscreteLoop([(0, 0), (1, 0)])
        with pytest.raises(ValueError):
            DiscreteLoop([(0, 1), (1, 1), (1, 2)])

    def test_diameter_examples(self):
        assert loop_diameter(DiscreteLoop([(0, 1), (1, 1)])) == 1
        assert loop_diameter(DiscreteLoop([(0, 1), (1, 1), (1, 2), (0, 2)])) == 1
        path = [(x, 1) for x in range(6)] + [(5, 2), (5, 3)]
        loop = DiscreteLoop(path + path[-2:0:-1])
        assert loop_diameter(loop) >= 5

    def test_hits_segment_examples(self):
        seg = Segment(VERTICAL, 1, 1, 2)
        a = DiscreteLoop([(8, 10), (9, 10)])
        b = DiscreteLoop([(8, 8), (9, 8)])
        assert loop_hits_segment(a, seg, 8)
        assert not loop_hits_segment(b, seg, 8)
        c = DiscreteLoop([(16, 10), (17, 10)])
        assert not loop_hits_segment(c, seg, 8)

    def test_contained_examples(self):
        loop = DiscreteLoop([(0, 1), (1, 1)])
        assert loop_contained(loop, Region([(0, 1), (1, 1), (2, 1)]))
        assert not loop_contained(loop, Region([(0, 1)]))
        assert not loop_contained(loop, Region())

    @settings(max_examples=60)
    @given(st.integers(0, 2 ** 31), st.integers(1, 12))
    def test_rooting_invariance(self, seed, half):
        rng = np.random.default_rng(seed)
        loop = DiscreteLoop(oracles.random_closed_walk(rng, (0, 3), 2 * half))
        k = int(rng.integers(len(loop)))
        seg = Segment(VERTICAL, 1, 0, 6)
        reg = Region.box(-15, 15, 1, 20)
        for other in (loop.rerooted(k), loop.reversed()):
            assert loop_diameter(other) == loop_diameter(loop)
            assert loop_hits_segment(other, seg) == loop_hits_segment(loop, seg)
            assert loop_contained(other, reg) == loop_contained(loop, reg)
            assert other.range() == loop.range()


class TestRegion:
    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            Region([(0, 0)])

    def test_sorted_and_indexed(self):
        r = Region([(1, 2), (0, 1), (5, 1), (0, 1)])
        assert list(r) == [(0, 1), (5, 1), (1, 2)]
        assert r.index_map()[(1, 2)] == 2

    def test_hash_depends_on_content(self):
        assert Region.box(0, 2, 1, 2).content_hash() == Region.box(0, 2, 1, 2).content_hash()
        assert Region.box(0, 2, 1, 2).content_hash() != Region.box(0, 2, 1, 3).content_hash()
