import math

import numpy as np
import pytest

from loopsoup.blocks import (BlockGrid, OmegaField, _hull_rates, build_omega_global,
                             build_omega_independent, edge_block, lss_dominated_p,
                             open_components, sample_hull_soup, spanning_open_path,
                             witness_connectivity_check)
from loopsoup.events import SQUARE_C2, SQUARE_C3
from loopsoup.geometry import Region, rect_region
from loopsoup.sampler import LoopSoup, filter_by_diameter, sample_soup_coupled

from test_events import C1_LOOPS, C2_LOOPS, C3_LOOPS

N = 4


def field(grid, open_edges=()):
    return OmegaField(grid, {e: e in set(open_edges) for e in grid.edges()}, "independent", N, 1.0)


def test_grid_edges():
    g = BlockGrid(3, 2)
    assert len(g.horizontal_edges()) == 4 and len(g.vertical_edges()) == 3
    assert all(k >= 1 for e in g.edges() for (_, k) in e)
    with pytest.raises(ValueError):
        BlockGrid(0, 2)
    with pytest.raises(ValueError):
        edge_block(((0, 1), (1, 2)), N)


def test_block_squares_are_node_squares():
    g = BlockGrid(3, 3)
    node_sq = {v: SQUARE_C2.scaled(N).translated(3 * N * v[0], 3 * N * v[1]) for v in g.nodes()}
    hull = g.hull(N)
    for e in g.edges():
        spec = edge_block(e, N)
        assert spec.rect(SQUARE_C2) == node_sq[e[0]]
        assert spec.rect(SQUARE_C3) == node_sq[e[1]]
        assert hull.contains_rect(spec.ext)


def test_alpha_zero_all_closed():
    g = BlockGrid(3, 2)
    soup = LoopSoup.empty(rect_region(g.hull(N), 1))
    assert not any(build_omega_global(soup, N, g).values.values())
    assert not any(build_omega_independent(N, 0.0, g, 1).values.values())
    with pytest.raises(ValueError):
        build_omega_independent(1, 1.0, g)


def test_hull_precondition():
    g = BlockGrid(2, 2)
    with pytest.raises(ValueError):
        build_omega_global(LoopSoup.empty(Region.box(0, 5, 1, 5)), N, g)


def _witness_loops(edge):
    spec = edge_block(edge, N)
    return [spec.to_lattice(np.array(l)) for l in C1_LOOPS + C2_LOOPS + C3_LOOPS]


def test_handcrafted_adjacent_edges_open():
    g = BlockGrid(3, 2)
    e1, e2 = ((0, 1), (1, 1)), ((1, 1), (1, 2))
    region = rect_region(g.hull(N), 1)
    soup = LoopSoup.from_loops(_witness_loops(e1) + _witness_loops(e2), region)
    om = build_omega_global(soup, N, g)
    assert om.open_edges() == [e1, e2]
    assert witness_connectivity_check(om, soup)
    # locality: deleting every loop outside an edge's block changes nothing
    for e in g.edges():
        keep = edge_block(e, N).contained_mask(soup)
        sub = build_omega_global(soup.subset(keep), N, g)
        assert sub.values[e] == om.values[e]


def test_locality_on_sampled_fields():
    g = BlockGrid(3, 2)
    for s in range(5):
        soup = sample_hull_soup(N, 12.0, g, s)
        om = build_omega_global(soup, N, g)
        for e in g.edges():
            keep = edge_block(e, N).contained_mask(soup)
            assert build_omega_global(soup.subset(keep), N, g).values[e] == om.values[e]


def test_truncation_invariance_small():
    g = BlockGrid(2, 2)
    for s in range(10):
        soup = sample_hull_soup(N, 10.0, g, s)
        full = build_omega_global(soup, N, g)
        cut = build_omega_global(filter_by_diameter(soup, max_d=6 * N), N, g)
        assert full.values == cut.values


def test_monotone_in_alpha():
    g = BlockGrid(2, 2)
    rates = _hull_rates(N, g.mx, g.my)
    for s in range(10):
        soups = sample_soup_coupled(rates, [4.0, 8.0, 12.0, 16.0], s)
        fields = [build_omega_global(x, N, g) for x in soups]
        for a, b in zip(fields, fields[1:]):
            assert all(a.values[e] <= b.values[e] for e in g.edges())


def test_independent_marginal_matches_global():
    g = BlockGrid(3, 2)
    n = 300
    glob = np.array([build_omega_global(sample_hull_soup(N, 12.0, g, (1, s)), N, g).open_fraction
                     for s in range(n)])
    ind = np.array([build_omega_independent(N, 12.0, g, (2, s)).open_fraction for s in range(n)])
    se = math.sqrt(glob.var(ddof=1) / n + ind.var(ddof=1) / n)
    assert abs(glob.mean() - ind.mean()) < 3 * se


def test_far_edges_uncorrelated():
    g = BlockGrid(4, 1)
    e0, e2 = g.horizontal_edges()[0], g.horizontal_edges()[2]
    x = []
    for s in range(400):
        om = build_omega_global(sample_hull_soup(N, 12.0, g, (3, s)), N, g)
        x.append((om.values[e0], om.values[e2]))
    a, b = np.array(x, dtype=float).T
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 3 / math.sqrt(len(a))


class TestSpanning:
    def test_all_open_and_closed(self):
        g = BlockGrid(4, 3)
        assert spanning_open_path(field(g, g.edges()))[0]
        assert spanning_open_path(field(g)) == (False, [])

    def test_handcrafted_path(self):
        g = BlockGrid(4, 3)
        path = [(0, 2), (1, 2), (1, 3), (2, 3), (3, 3)]
        edges = []
        for a, b in zip(path, path[1:]):
            edges.append((a, b) if (b[0] > a[0] or b[1] > a[1]) else (b, a))
        ok, found = spanning_open_path(field(g, edges))
        assert ok and found == path

    def test_against_closure(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            mx, my = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            g = BlockGrid(mx, my)
            p = rng.uniform(0.2, 0.8)
            om = field(g, [e for e in g.edges() if rng.random() < p])
            nodes = g.nodes()
            idx = {v: i for i, v in enumerate(nodes)}
            R = np.eye(len(nodes), dtype=bool)
            for a, b in om.open_edges():
                R[idx[a], idx[b]] = R[idx[b], idx[a]] = True
            for k in range(len(nodes)):
                R |= R[:, [k]] & R[[k], :]
            expect = any(R[idx[(0, a)], idx[(mx - 1, b)]]
                         for a in range(1, my + 1) for b in range(1, my + 1))
            ok, path = spanning_open_path(om)
            assert ok == expect
            if ok:
                assert path[0][0] == 0 and path[-1][0] == mx - 1
                for a, b in zip(path, path[1:]):
                    assert om.values.get((a, b), False) or om.values.get((b, a), False)


class TestWitness:
    def test_empty_field(self):
        g = BlockGrid(2, 2)
        soup = LoopSoup.empty(rect_region(g.hull(N), 1))
        assert witness_connectivity_check(build_omega_global(soup, N, g), soup)

    def test_single_edge(self):
        g = BlockGrid(2, 1)
        e = g.edges()[0]
        soup = LoopSoup.from_loops(_witness_loops(e), rect_region(g.hull(N), 1))
        om = build_omega_global(soup, N, g)
        assert om.values[e] and witness_connectivity_check(om, soup)

    def test_sampled_adjacent_pairs(self):
        g = BlockGrid(3, 1)
        seen = 0
        for s in range(40):
            soup = sample_hull_soup(N, 14.0, g, (5, s))
            om = build_omega_global(soup, N, g)
            if all(om.values.values()):
                seen += 1
            assert witness_connectivity_check(om, soup)
        assert seen > 5

    def test_requires_global(self):
        g = BlockGrid(2, 1)
        with pytest.raises(ValueError):
            witness_connectivity_check(field(g), LoopSoup.from_loops([]))

    def test_components(self):
        g = BlockGrid(4, 1)
        h = g.horizontal_edges()
        assert sorted(map(len, open_components(field(g, [h[0], h[2]])))) == [1, 1]
        assert [len(c) for c in open_components(field(g, h[:2]))] == [2]


def test_lss():
    assert lss_dominated_p(1.0) == 1.0
    assert lss_dominated_p(0.0) == 0.0
    assert lss_dominated_p(0.99) >= lss_dominated_p(0.9)
    ps = np.linspace(0, 1, 101)
    vals = [lss_dominated_p(p) for p in ps]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert lss_dominated_p(0.3, "identity") == 0.3
    with pytest.raises(ValueError):
        lss_dominated_p(0.5, "bogus")
    with pytest.raises(ValueError):
        lss_dominated_p(1.5)


def test_text_roundtrip():
    g = BlockGrid(3, 3)
    rng = np.random.default_rng(1)
    om = field(g, [e for e in g.edges() if rng.random() < 0.5])
    text = om.to_text()
    lines = text.splitlines()
    assert lines[1] == "H" and lines[5] == "V" and len(lines) == 8
    back = OmegaField.from_text(text)
    assert back.values == om.values and back.grid == g
