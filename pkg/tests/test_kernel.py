import json
import math

import numpy as np
import pytest

import oracles
from loopsoup.geometry import Region
from loopsoup.kernel import (build_kernel, cached_pointed_rates, edge_backforth_mass,
                             load_rates, pointed_rates, save_rates, total_loop_mass,
                             vertex_hit_mass)
from loopsoup.sampler import loop_mass_series


def random_region(rng, max_n=40):
    pool = [(x, y) for x in range(8) for y in range(1, 7)]
    n = int(rng.integers(1, max_n + 1))
    pick = rng.choice(len(pool), size=n, replace=False)
    return Region([pool[i] for i in pick])


def test_build_kernel_examples():
    assert np.array_equal(build_kernel(Region([(0, 1), (1, 1)])).dense(),
                          [[0, 0.25], [0.25, 0]])
    assert np.array_equal(build_kernel(Region([(0, 1)])).dense(), [[0.0]])
    assert not build_kernel(Region([(0, 1), (2, 1)])).dense().any()


def test_kernel_invariants():
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = build_kernel(random_region(rng)).dense()
        assert np.array_equal(P, P.T)
        assert set(np.unique(P)) <= {0.0, 0.25}
        assert P.sum(axis=1).max() <= 1
        assert np.max(np.abs(np.linalg.eigvalsh(P))) < 1


def test_masses_against_series_oracle(two_vertex):
    assert abs(total_loop_mass(build_kernel(two_vertex)) - oracles.LOG_16_15) < 1e-12
    assert abs(total_loop_mass(build_kernel(Region.box(0, 2, 1, 2))) - oracles.MASS_BOX_3x2) < 1e-12
    assert abs(total_loop_mass(build_kernel(Region.box(0, 1, 1, 2))) - oracles.MASS_SQUARE_2x2) < 1e-12
    assert total_loop_mass(build_kernel(Region([(0, 1)]))) == 0
    assert total_loop_mass(build_kernel(Region())) == 0


def test_library_series_matches_det():
    rng = np.random.default_rng(5)
    for _ in range(10):
        reg = random_region(rng, 12)
        val, bound = loop_mass_series(reg)
        assert bound < 1e-12
        assert abs(val - total_loop_mass(build_kernel(reg))) < 1e-9


def test_two_vertex_rates(two_vertex):
    rates = pointed_rates(build_kernel(two_vertex))
    assert np.allclose(rates.r, [1 / 16, 0], atol=1e-15)
    assert rates.lam[1] == 0
    assert pointed_rates(build_kernel(Region([(0, 1)]))).r.tolist() == [0.0]


def test_strip_rates_match_path_counting():
    strip = Region([(0, 1), (1, 1), (2, 1)])
    middle = pointed_rates(build_kernel(strip, [(1, 1), (0, 1), (2, 1)]))
    assert abs(middle.r[0] - oracles.R_STRIP_MIDDLE) < 1e-12
    assert np.allclose(middle.r[1:], 0)
    end = pointed_rates(build_kernel(strip, [(0, 1), (1, 1), (2, 1)]))
    assert abs(end.r[0] - oracles.R_STRIP_END) < 1e-12


@pytest.mark.parametrize("method", ["green", "cholesky"])
def test_decomposition_and_ordering_invariance(method):
    rng = np.random.default_rng(11)
    for _ in range(30):
        reg = random_region(rng)
        verts = list(reg)
        mass = total_loop_mass(build_kernel(reg))
        for _ in range(2):
            order = [verts[i] for i in rng.permutation(len(verts))]
            rates = pointed_rates(build_kernel(reg, order), method)
            assert abs(rates.total - mass) < 1e-9
            assert np.all((rates.r >= 0) & (rates.r < 1))


def test_green_and_cholesky_agree():
    k = build_kernel(Region.box(0, 20, 1, 10))
    a = pointed_rates(k, "green")
    b = pointed_rates(k, "cholesky")
    assert np.allclose(a.r, b.r, atol=1e-12)


def test_return_probabilities_match_path_counting_in_box():
    reg = Region.box(0, 3, 1, 3)
    order = list(reg)
    rates = pointed_rates(build_kernel(reg, order))
    alive = list(order)
    for i, v in enumerate(order[:5]):
        val, tail, _ = oracles.return_probability(alive, v, max_len=400)
        assert tail < 1e-9
        assert abs(rates.r[i] - val) < 1e-9
        alive.remove(v)


def test_mass_monotone():
    small = Region.box(0, 3, 1, 2)
    big = Region.box(0, 4, 1, 3)
    assert total_loop_mass(build_kernel(small)) <= total_loop_mass(build_kernel(big))


def test_vertex_hit_mass(two_vertex):
    k = build_kernel(two_vertex)
    assert abs(vertex_hit_mass(k, (0, 1)) - math.log(16 / 15)) < 1e-12
    assert abs(vertex_hit_mass(k, (1, 1)) - math.log(16 / 15)) < 1e-12
    iso = build_kernel(Region([(0, 1), (1, 1), (5, 1)]))
    assert abs(vertex_hit_mass(iso, (5, 1))) < 1e-15
    box = build_kernel(Region.box(0, 3, 1, 3))
    assert all(vertex_hit_mass(box, v) >= 0 for v in box.region)
    with pytest.raises(ValueError):
        vertex_hit_mass(k, (9, 9))


def test_edge_backforth_mass():
    assert abs(edge_backforth_mass() - oracles.LOG_16_15) < 1e-15
    assert abs(1 - math.exp(-edge_backforth_mass()) - 1 / 16) < 1e-15


def test_large_region_uses_factorization():
    reg = Region.box(0, 100, 1, 50)
    rates = pointed_rates(build_kernel(reg))
    assert abs(rates.total - total_loop_mass(build_kernel(reg))) < 1e-8
    k = build_kernel(Region.box(0, 60, 1, 40))
    dense = -np.linalg.slogdet(np.eye(k.n) - k.dense())[1]
    assert abs(total_loop_mass(k) - dense) < 1e-9


def test_rates_cache_roundtrip(tmp_path):
    reg = Region.box(0, 4, 1, 3)
    rates = pointed_rates(build_kernel(reg))
    path = tmp_path / "r.json"
    save_rates(rates, str(path))
    back = load_rates(str(path))
    assert back.region == reg
    assert np.array_equal(back.r, rates.r) and np.array_equal(back.ordering, rates.ordering)
    json.loads(path.read_text())
    a = cached_pointed_rates(reg, str(tmp_path / "cache"))
    b = cached_pointed_rates(reg, str(tmp_path / "cache"))
    assert np.array_equal(a.lam, b.lam)
