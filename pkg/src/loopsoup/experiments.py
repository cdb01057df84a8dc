"""
Monte Carlo campaigns at desk scale.

Every campaign is a deterministic function of its parameters and master seed:
replica ``j`` draws from the substream ``(seed, tag, j)`` whatever the number
of workers.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .blocks import block_rates
from .clusters import (build_clusters, cluster_crosses_rect, crossing_by_level,
                       largest_cluster_stats)
from .events import BlockSpec, special_crossing
from .geometry import HORIZONTAL, DiscreteLoop, RealRect, Region
from .kernel import PointedRates, build_kernel, edge_backforth_mass, pointed_rates
from .rng import SeedLike, make_rng, map_replicas, seed_key
from .sampler import (SamplerConfig, SamplingError, filter_by_diameter, sample_soup,
                      sample_soup_coupled)

#: Share of failed replicas above which a sweep aborts.
MAX_FAILURE_RATE = 1e-3
#: Intensity at which loop clusters on the half-plane start to percolate.
ALPHA_STAR = 0.5

# stream tags, so that campaigns sharing a master seed stay independent
_TAG_SWEEP, _TAG_BOX, _TAG_TRUNC, _TAG_BERN = 1, 2, 3, 4


def wilson_interval(successes: int, n: int, confidence: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("need at least one sample")
    ci = binomtest(int(successes), int(n)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SweepResult:
    """Crossing frequencies with Wilson intervals.

    ``rows`` hold ``alpha, N, samples, p_hat, ci_low, ci_high, seed``. For
    sweeps, ``outcomes[N]`` is the boolean array of shape
    ``(samples, n_alpha, 4)`` with the C1, C2, C3 and joint indicators of
    every replica, which makes per-replica monotonicity checkable.
    """

    rows: List[dict]
    confidence: float = 0.95
    outcomes: Dict[int, np.ndarray] = field(default_factory=dict)
    failures: int = 0

    COLUMNS = ("alpha", "N", "samples", "p_hat", "ci_low", "ci_high", "seed")

    def p_hat(self, alpha: float, N: int) -> float:
        return self.row(alpha, N)["p_hat"]

    def row(self, alpha: float, N: int) -> dict:
        for r in self.rows:
            if r["alpha"] == alpha and r["N"] == N:
                return r
        raise KeyError((alpha, N))

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.COLUMNS])


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, tuple):
        return ":".join(map(str, x))
    return x


def _row(alpha, N, hits, n, key, confidence=0.95):
    lo, hi = wilson_interval(hits, n, confidence)
    p = hits / n
    return {"alpha": float(alpha), "N": int(N), "samples": int(n), "p_hat": p,
            "ci_low": min(lo, p), "ci_high": max(hi, p), "seed": key}


# --- special crossing sweeps ------------------------------------------------------

def _sweep_replica(args):
    N, alphas, key, config = args
    out = np.zeros((len(alphas), 4), dtype=bool)
    try:
        soups = sample_soup_coupled(block_rates(N), alphas, key, config)
    except SamplingError:
        return None
    spec = BlockSpec(N)
    for a, soup in enumerate(soups):
        if len(soup) == 0:
            continue
        res = special_crossing(soup, spec)
        out[a, :3] = [res.satisfied[k] for k in ("C1", "C2", "C3")]
        out[a, 3] = res.all
    return out


def crossing_outcomes(N: int, alphas: Sequence[float], samples: int, seed: SeedLike = 0,
                      config: Optional[SamplerConfig] = None, workers: int = 1,
                      start: int = 0):
    """Per-replica event indicators for the coupled soups of a single block.

    Returns ``(outcomes, failures)`` where ``outcomes`` has shape
    ``(n_ok, len(alphas), 4)``. Replicas ``start .. start + samples - 1`` are drawn.
    """
    key = seed_key(seed)
    alphas = [float(a) for a in alphas]
    block_rates(N)
    res = map_replicas(_sweep_replica,
                       [(N, alphas, key + (_TAG_SWEEP, N, j), config)
                        for j in range(start, start + samples)], workers)
    ok = [r for r in res if r is not None]
    failures = len(res) - len(ok)
    arr = np.array(ok, dtype=bool).reshape(len(ok), len(alphas), 4)
    return arr, failures


def sweep_crossing_probability(alphas: Sequence[float], Ns: Sequence[int], samples: int,
                               seed: SeedLike = 0, config: Optional[SamplerConfig] = None,
                               workers: int = 1) -> SweepResult:
    """Special crossing frequency ``p_N(alpha)`` on a single block.

    The soups at the different intensities are coupled (nested), so each
    replica's indicators are non-decreasing in ``alpha``.

    Raises
    ------
    SamplingError
        If more than 0.1% of the replicas hit the sampler caps.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if any(N < 2 for N in Ns):
        raise ValueError("N must be >= 2")
    key = seed_key(seed)
    alphas = sorted(float(a) for a in alphas)
    result = SweepResult([])
    for N in Ns:
        arr, fails = crossing_outcomes(N, alphas, samples, key, config, workers)
        if fails > MAX_FAILURE_RATE * samples:
            raise SamplingError(f"{fails} of {samples} replicas failed at N={N}")
        result.failures += fails
        result.outcomes[int(N)] = arr
        n = len(arr)
        for a, alpha in enumerate(alphas):
            result.rows.append(_row(alpha, N, int(arr[:, a, 3].sum()), n, key))
    return result


def convergence_diagnostic(Ns: Sequence[int], alpha: float, samples: int, seed: SeedLike = 0,
                           config: Optional[SamplerConfig] = None, workers: int = 1) -> List[dict]:
    """Special crossing probability across scales, with the step to the previous ``N``.

    Each row carries ``N, p_hat, ci_low, ci_high, diff`` and ``z``, the
    difference divided by its standard error (``nan`` on the first row or when
    both estimates are degenerate).
    """
    if len(Ns) < 2:
        raise ValueError("need at least two scales")
    res = sweep_crossing_probability([alpha], Ns, samples, seed, config, workers)
    rows, prev = [], None
    for N in Ns:
        r = dict(res.row(float(alpha), N))
        diff = z = math.nan
        if prev is not None:
            diff = r["p_hat"] - prev["p_hat"]
            se = math.sqrt(_var(prev) + _var(r))
            z = diff / se if se > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
        r["diff"], r["z"] = diff, z
        rows.append(r)
        prev = r
    return rows


def _var(row):
    p = row["p_hat"]
    return p * (1 - p) / row["samples"]


# --- box crossings ----------------------------------------------------------------

def crossing_box(M: int) -> Region:
    """The box ``[0, 2M] x (0, M]`` on the half-plane."""
    return Region.box(0, 2 * M, 1, M)


def central_square(M: int) -> RealRect:
    return RealRect(M / 2, 3 * M / 2, 0, M)


@lru_cache(maxsize=8)
def _box_rates(M: int) -> PointedRates:
    return pointed_rates(build_kernel(crossing_box(M)))


def _box_replica(args):
    M, alphas, key, config = args
    try:
        (top,) = sample_soup_coupled(_box_rates(M), [alphas[-1]], key, config)
    except SamplingError:
        return None
    level = np.searchsorted(np.asarray(alphas), top.marks, side="left")
    return crossing_by_level(top, level, len(alphas), central_square(M), 1, HORIZONTAL)


def _interpolate_half(alphas, curve, level=0.5):
    above = np.flatnonzero(curve >= level)
    if len(above) == 0:
        return math.nan, "above-grid"
    i = int(above[0])
    if i == 0:
        return (float(alphas[0]), "ok") if curve[0] == level else (math.nan, "below-grid")
    a0, a1, p0, p1 = alphas[i - 1], alphas[i], curve[i - 1], curve[i]
    return float(a0 + (level - p0) * (a1 - a0) / (p1 - p0)), "ok"


@dataclass
class AlphaCEstimate:
    """Box-crossing curves and their crossing points with 1/2.

    ``alpha_hat[M]`` is ``nan`` when the curve does not reach 1/2 inside the
    grid; ``status[M]`` then says ``"above-grid"`` or ``"below-grid"``.
    """

    alpha_grid: np.ndarray
    box_sizes: List[int]
    curves: Dict[int, np.ndarray]
    replicas: Dict[int, np.ndarray]
    alpha_hat: Dict[int, float]
    status: Dict[int, str]
    samples: int
    seed: tuple
    target: float = ALPHA_STAR

    def summary(self) -> List[dict]:
        return [{"M": M, "alpha_hat": self.alpha_hat[M], "status": self.status[M],
                 "target": self.target,
                 "p_at_max_alpha": float(self.curves[M][-1])} for M in self.box_sizes]

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "alpha", "samples", "p_cross", "ci_low", "ci_high"])
        for M in self.box_sizes:
            for a, p in zip(self.alpha_grid, self.curves[M]):
                hits = int(round(p * self.samples))
                lo, hi = wilson_interval(hits, self.samples)
                w.writerow([M, repr(float(a)), self.samples, repr(float(p)), repr(lo), repr(hi)])


def estimate_alpha_c(box_sizes: Sequence[int], alpha_grid: Sequence[float], samples: int,
                     seed: SeedLike = 0, config: Optional[SamplerConfig] = None,
                     workers: int = 1) -> AlphaCEstimate:
    """Left-right crossing of the central square of ``[0, 2M] x (0, M]``.

    One soup at the largest intensity serves the whole grid: loops enter in
    the order of their coupling marks and the crossing is tracked by
    incremental union-find.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    if len(alphas) == 0 or np.any(np.diff(alphas) <= 0) or alphas[0] < 0:
        raise ValueError("alpha_grid must be non-negative and strictly ascending")
    if list(box_sizes) != sorted(box_sizes) or min(box_sizes) < 2:
        raise ValueError("box sizes must be ascending and >= 2")
    key = seed_key(seed)
    curves, reps, hat, status = {}, {}, {}, {}
    for M in box_sizes:
        _box_rates(M)
        res = map_replicas(_box_replica, [(M, tuple(alphas), key + (_TAG_BOX, M, j), config)
                                          for j in range(samples)], workers)
        ok = [r for r in res if r is not None]
        if len(res) - len(ok) > MAX_FAILURE_RATE * samples:
            raise SamplingError(f"{len(res) - len(ok)} of {samples} replicas failed at M={M}")
        arr = np.array(ok, dtype=bool).reshape(len(ok), len(alphas))
        reps[M] = arr
        curves[M] = arr.mean(axis=0)
        hat[M], status[M] = _interpolate_half(alphas, curves[M])
    return AlphaCEstimate(alphas, list(box_sizes), curves, reps, hat, status, samples, key)


# --- diameter truncation ----------------------------------------------------------

def _truncation_replica(args):
    M, alpha, cutoffs, key, config = args
    soup = sample_soup(_box_rates(M), alpha, key, config)
    rect = central_square(M)
    rows = []
    for n in list(cutoffs) + [math.inf]:
        sub = filter_by_diameter(soup, max_d=n) if math.isfinite(n) else soup
        part = build_clusters(sub)
        st = largest_cluster_stats(part)
        rows.append((len(sub), st.vertex_count, int(part.diameter.max()) if len(sub) else 0,
                     cluster_crosses_rect(part, sub, rect)))
    return rows


def truncation_experiment(alpha: float, cutoffs: Sequence[int], box: int, samples: int,
                          seed: SeedLike = 0, config: Optional[SamplerConfig] = None,
                          workers: int = 1) -> List[dict]:
    """Cluster statistics of the soup keeping only loops of diameter ``<= n``.

    One row per cutoff plus a final row (``cutoff = inf``) for the full soup:
    mean loop count, mean and per-replica largest-cluster size, mean largest
    cluster diameter and crossing frequency of the central square. Filtering
    the same soup makes every statistic non-decreasing in ``n`` replica by
    replica; ``monotone`` records whether that held.
    """
    cutoffs = [int(n) for n in cutoffs]
    if cutoffs != sorted(cutoffs) or (cutoffs and cutoffs[0] < 0):
        raise ValueError("cutoffs must be ascending and non-negative")
    key = seed_key(seed)
    _box_rates(box)
    res = np.array(map_replicas(_truncation_replica,
                                [(box, float(alpha), tuple(cutoffs), key + (_TAG_TRUNC, j), config)
                                 for j in range(samples)], workers), dtype=float)
    # res: (samples, n_cutoffs + 1, 4)
    mono = bool(np.all(np.diff(res, axis=1) >= 0))
    out = []
    for c, n in enumerate(list(cutoffs) + [math.inf]):
        cross = int(res[:, c, 3].sum())
        lo, hi = wilson_interval(cross, samples)
        out.append({"cutoff": n, "alpha": float(alpha), "box": box, "samples": samples,
                    "mean_loops": float(res[:, c, 0].mean()),
                    "mean_largest_vertices": float(res[:, c, 1].mean()),
                    "mean_max_cluster_diameter": float(res[:, c, 2].mean()),
                    "p_cross": cross / samples, "ci_low": lo, "ci_high": hi,
                    "largest_vertices": res[:, c, 1].astype(int), "monotone": mono})
    return out


# --- Bernoulli minorant -----------------------------------------------------------

def bernoulli_minorant(alpha: float) -> float:
    """Open probability ``1 - (15/16)**alpha`` of an edge carrying a back-and-forth loop."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return -math.expm1(-alpha * edge_backforth_mass())


def bernoulli_threshold(p: float = 0.5) -> float:
    """Intensity at which the minorant's edge probability equals ``p``."""
    return -math.log1p(-p) / edge_backforth_mass()


def backforth_edges(soup, region: Region) -> np.ndarray:
    """Indicator of every nearest-neighbour edge of ``region`` (``region_edges`` order)
    being the whole range of some loop of ``soup``."""
    edges = region_edges(region)
    if len(soup) == 0:
        return np.zeros(len(edges), dtype=bool)
    b = soup.bboxes()
    two = (b[:, 1] - b[:, 0]) + (b[:, 3] - b[:, 2]) == 1
    lows = {(int(x), int(y), int(x1 - x)) for x, x1, y in zip(b[two, 0], b[two, 1], b[two, 2])}
    return np.array([(x, y, int(h)) in lows for x, y, h in edges], dtype=bool)


def region_edges(region: Region) -> List[tuple]:
    """Edges as ``(x, y, horizontal)`` with ``(x, y)`` the lower-left endpoint."""
    out = []
    for x, y in region:
        if (x + 1, y) in region:
            out.append((x, y, 1))
        if (x, y + 1) in region:
            out.append((x, y, 0))
    return out


def _bond_crossing(open_edges, edges, region: Region) -> bool:
    """Left-right crossing of the region's bounding box by open bonds."""
    idx = region.index_map()
    parent = list(range(len(region)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for (x, y, h), o in zip(edges, open_edges):
        if o:
            u = idx[(x, y)]
            v = idx[(x + 1, y) if h else (x, y + 1)]
            parent[find(u)] = find(v)
    x0, x1, _, _ = region.bbox()
    left = {find(idx[v]) for v in region if v[0] == x0}
    return any(find(idx[v]) in left for v in region if v[0] == x1)


@dataclass
class BernoulliComparison:
    alpha: float
    p_closed_form: float
    open_frequency: float
    standard_error: float
    n_edges: int
    crossing_soup: float
    crossing_iid: float

    @property
    def z(self) -> float:
        d = self.open_frequency - self.p_closed_form
        return d / self.standard_error if self.standard_error > 0 else (0.0 if d == 0 else math.inf)


def bernoulli_simulation(alpha: float, box: int, samples: int, seed: SeedLike = 0,
                         config: Optional[SamplerConfig] = None) -> BernoulliComparison:
    """Compare the back-and-forth edges of sampled soups with i.i.d. bonds.

    On ``[0, box] x [1, box]`` each edge is declared open when some loop has
    exactly that edge's endpoints as range. The open frequency is compared with
    ``1 - (15/16)**alpha``; the left-right crossing frequency of these bonds is
    reported next to that of directly sampled i.i.d. bonds.
    """
    region = Region.box(0, box, 1, box)
    rates = pointed_rates(build_kernel(region))
    edges = region_edges(region)
    p = bernoulli_minorant(alpha)
    key = seed_key(seed)
    opened = cross_s = cross_i = 0
    for j in range(samples):
        soup = sample_soup(rates, alpha, key + (_TAG_BERN, j), config)
        flags = backforth_edges(soup, region)
        opened += int(flags.sum())
        cross_s += _bond_crossing(flags, edges, region)
        iid = make_rng(key + (_TAG_BERN + 1, j)).random(len(edges)) < p
        cross_i += _bond_crossing(iid, edges, region)
    n = samples * len(edges)
    freq = opened / n
    return BernoulliComparison(float(alpha), p, freq, math.sqrt(p * (1 - p) / n), n,
                               cross_s / samples, cross_i / samples)


# --- the interpolation map ----------------------------------------------------------

@dataclass(frozen=True)
class ContinuousLoop:
    """Closed piecewise-linear loop ``[0, duration] -> R^2``.

    ``points[j]`` is the position at ``times[j]``; the last point repeats the first.
    """

    duration: float
    times: np.ndarray
    points: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.times, self.points[:, 0]),
                         np.interp(t, self.times, self.points[:, 1])], axis=-1)

    @property
    def closed(self) -> bool:
        return bool(np.array_equal(self.points[0], self.points[-1]))

    def to_json(self) -> dict:
        return {"duration": self.duration,
                "points": [[float(t), float(x), float(y)]
                           for t, (x, y) in zip(self.times, self.points)]}


def interpolate_loop(loop: DiscreteLoop, N: int) -> ContinuousLoop:
    """Rescale a discrete loop by ``1/N`` in space and ``1/(2N^2)`` in time.

    A loop with ``n`` steps becomes a loop of duration ``n / (2N^2)`` passing
    through ``z_j / N`` at time ``j / (2N^2)``, linear in between.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    v = np.asarray(loop.vertices, dtype=float)
    n = len(v)
    scale = 2.0 * N * N
    pts = np.vstack([v, v[:1]]) / N
    return ContinuousLoop(n / scale, np.arange(n + 1) / scale, pts)
