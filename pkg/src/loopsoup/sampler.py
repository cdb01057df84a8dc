"""
Exact sampling of random walk loop soups on finite regions.

The main sampler uses the pointed-loop decomposition: for the vertices
``v_1, ..., v_n`` of an elimination ordering, a Poisson(alpha * lam_i) number of
loops is rooted at ``v_i``; each one makes a logarithmic number of returns to
``v_i``, every return being an excursion of simple random walk conditioned to
come back before leaving ``G_i = A - {v_1, ..., v_{i-1}}``.

Loops are rooted at the vertex that generated them. Everything downstream
(clusters, crossings, diameters) ignores the root, but the rooted law is *not*
the rooted marginal of the loop measure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import _core
from .geometry import DiscreteLoop, Region
from .kernel import PointedRates, build_kernel
from .rng import SeedLike, make_rng, seed_key


class SamplingError(RuntimeError):
    """An excursion hit the rejection or step cap; no soup is returned."""


@dataclass(frozen=True)
class SamplerConfig:
    max_rejections: int = 10_000_000
    max_steps: int = 100_000_000

    def __post_init__(self):
        if self.max_rejections < 1 or self.max_steps < 1:
            raise ValueError("sampler caps must be >= 1")


@dataclass
class LoopSoup:
    """A finite collection of loops, packed as one coordinate array.

    Loop ``i`` visits ``coords[offsets[i]:offsets[i + 1]]``.
    """

    region: Region
    alpha: float
    coords: np.ndarray
    offsets: np.ndarray
    seed: Optional[tuple] = None
    provenance: str = ""
    marks: Optional[np.ndarray] = None
    _bbox: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @classmethod
    def empty(cls, region: Region, alpha: float = 0.0, **kw) -> "LoopSoup":
        return cls(region, alpha, np.zeros((0, 2), dtype=np.int64),
                   np.zeros(1, dtype=np.int64), **kw)

    @classmethod
    def from_loops(cls, loops: Sequence, region: Optional[Region] = None,
                   alpha: float = 0.0, **kw) -> "LoopSoup":
        arrs = [np.asarray(l.vertices if isinstance(l, DiscreteLoop) else DiscreteLoop(l).vertices,
                           dtype=np.int64).reshape(-1, 2) for l in loops]
        if region is None:
            region = Region(np.concatenate(arrs)) if arrs else Region()
        if not arrs:
            return cls.empty(region, alpha, **kw)
        offsets = np.concatenate([[0], np.cumsum([len(a) for a in arrs])]).astype(np.int64)
        return cls(region, alpha, np.concatenate(arrs), offsets, **kw)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, i: int) -> DiscreteLoop:
        if i < 0:
            i += len(self)
        return DiscreteLoop(self.coords[self.offsets[i]:self.offsets[i + 1]], check=False)

    def __iter__(self) -> Iterator[DiscreteLoop]:
        return (self[i] for i in range(len(self)))

    @property
    def loops(self) -> List[DiscreteLoop]:
        return list(self)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def loop_index(self) -> np.ndarray:
        """Loop index of every row of ``coords``."""
        return np.repeat(np.arange(len(self)), self.lengths)

    def bboxes(self) -> np.ndarray:
        """Per-loop ``(x_min, x_max, y_min, y_max)``, shape ``(n, 4)``."""
        if self._bbox is None:
            if len(self) == 0:
                self._bbox = np.zeros((0, 4), dtype=np.int64)
            else:
                starts = self.offsets[:-1]
                x, y = self.coords[:, 0], self.coords[:, 1]
                self._bbox = np.column_stack([
                    np.minimum.reduceat(x, starts), np.maximum.reduceat(x, starts),
                    np.minimum.reduceat(y, starts), np.maximum.reduceat(y, starts)])
        return self._bbox

    def diameters(self) -> np.ndarray:
        b = self.bboxes()
        return np.maximum(b[:, 1] - b[:, 0], b[:, 3] - b[:, 2])

    def subset(self, select) -> "LoopSoup":
        """Soup made of the selected loops (boolean mask or index array), in order."""
        idx = np.asarray(select)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        lengths = self.lengths[idx]
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        if len(idx):
            coords = self.coords[_gather_rows(self.offsets, idx)]
        else:
            coords = np.zeros((0, 2), dtype=np.int64)
        marks = None if self.marks is None else self.marks[idx]
        return replace(self, coords=coords, offsets=offsets, marks=marks, _bbox=None)

    def concat(self, other: "LoopSoup") -> "LoopSoup":
        coords = np.concatenate([self.coords, other.coords])
        offsets = np.concatenate([self.offsets, other.offsets[1:] + self.offsets[-1]])
        marks = None
        if self.marks is not None and other.marks is not None:
            marks = np.concatenate([self.marks, other.marks])
        return replace(self, coords=coords, offsets=offsets, marks=marks, _bbox=None)

    def ranges(self) -> List[frozenset]:
        return [l.range() for l in self]


def _gather_rows(offsets, idx):
    starts = offsets[idx]
    lengths = offsets[idx + 1] - starts
    base = np.repeat(starts - np.concatenate([[0], np.cumsum(lengths)[:-1]]), lengths)
    return base + np.arange(lengths.sum())


def _walk_grid(region: Region, ordering: np.ndarray):
    """Padded rank grid plus the grid coordinates of the ordering."""
    x0, x1, y0, y1 = region.bbox()
    rank = np.full((x1 - x0 + 3, y1 - y0 + 3), -1, dtype=np.int64)
    px = ordering[:, 0] - x0 + 1
    py = ordering[:, 1] - y0 + 1
    rank[px, py] = np.arange(len(ordering))
    return rank, np.ascontiguousarray(px), np.ascontiguousarray(py), (x0 - 1, y0 - 1)


def _raise_status(status):
    if status == _core.REJECTION_CAP:
        raise SamplingError("excursion rejection cap exceeded")
    if status == _core.STEP_CAP:
        raise SamplingError("excursion step cap exceeded")


def sample_soup(rates: PointedRates, alpha: float, seed: SeedLike = 0,
                config: Optional[SamplerConfig] = None,
                rng: Optional[np.random.Generator] = None) -> LoopSoup:
    """Sample the loop soup of intensity ``alpha`` restricted to ``rates.region``.

    Parameters
    ----------
    rates : PointedRates
        Output of :func:`loopsoup.kernel.pointed_rates` for the region.
    alpha : float
        Intensity, ``>= 0``.
    seed : int or tuple of int
        Key of the Philox substream. Ignored if ``rng`` is given.
    config : SamplerConfig, optional
        Caps on the excursion sampler. Exceeding them raises
        :class:`SamplingError` instead of truncating the law.

    Returns
    -------
    LoopSoup
        Loops rooted at their generating vertex, in ordering order.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    config = config or SamplerConfig()
    key = seed_key(seed)
    region = rates.region
    if alpha == 0 or len(region) == 0:
        return LoopSoup.empty(region, alpha, seed=key, provenance="pointed")
    rng = rng if rng is not None else make_rng(key)
    rank, px, py, (ox, oy) = _walk_grid(region, rates.ordering)
    xs, ys, offsets, _, status = _core.sample_pointed(
        rng, rank, px, py, rates.r, rates.lam, float(alpha),
        config.max_rejections, config.max_steps)
    _raise_status(status)
    coords = np.column_stack([xs + ox, ys + oy]).astype(np.int64)
    return LoopSoup(region, float(alpha), coords, offsets.copy(), seed=key, provenance="pointed")


def sample_excursion(rates: PointedRates, i: int, rng: np.random.Generator,
                     config: Optional[SamplerConfig] = None) -> np.ndarray:
    """One excursion from ``ordering[i]`` inside ``G_i``, as an ``(m, 2)`` vertex array.

    The root comes first; the final return to the root is implicit.
    """
    config = config or SamplerConfig()
    if rates.r[i] <= 0:
        raise ValueError("vertex has no return excursion in its surviving region")
    rank, px, py, (ox, oy) = _walk_grid(rates.region, rates.ordering)
    tx = np.empty(64, dtype=np.int64)
    ty = np.empty(64, dtype=np.int64)
    m, tx, ty, status = _core.excursion(rng, rank, px[i], py[i], i, tx, ty,
                                        np.zeros(2, dtype=np.int64),
                                        config.max_rejections, config.max_steps)
    _raise_status(status)
    return np.column_stack([tx[:m] + ox, ty[:m] + oy])


def sample_soup_coupled(rates: PointedRates, alphas: Sequence[float], seed: SeedLike = 0,
                        config: Optional[SamplerConfig] = None) -> List[LoopSoup]:
    """Nested soups at increasing intensities.

    A soup at the largest intensity is drawn and every loop gets an independent
    uniform mark in ``[0, alpha_max]``; the soup at ``alpha`` keeps the loops
    with mark ``<= alpha``. Loops are sorted by mark, so each soup is a prefix
    of the next one.
    """
    alphas = [float(a) for a in alphas]
    if not alphas:
        return []
    if alphas[0] < 0 or any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be non-negative and strictly ascending")
    key = seed_key(seed)
    amax = alphas[-1]
    rng = make_rng(key)
    top = sample_soup(rates, amax, key, config, rng=rng)
    marks = rng.uniform(0.0, amax, len(top)) if amax > 0 else np.zeros(0)
    order = np.argsort(marks, kind="stable")
    top = top.subset(order)
    top.marks = marks[order]
    top.provenance = "pointed-coupled"
    out = []
    for a in alphas:
        k = int(np.searchsorted(top.marks, a, side="right")) if a < amax else len(top)
        s = top.subset(np.arange(k))
        s.alpha = a
        out.append(s)
    return out


def filter_by_diameter(soup: LoopSoup, min_d: Optional[float] = None,
                       max_d: Optional[float] = None) -> LoopSoup:
    """Keep the loops with ``min_d <= diameter <= max_d`` (L-infinity diameter)."""
    if min_d is not None and max_d is not None and min_d > max_d:
        raise ValueError("min_d must not exceed max_d")
    d = soup.diameters()
    keep = np.ones(len(soup), dtype=bool)
    if min_d is not None:
        keep &= d >= min_d
    if max_d is not None:
        keep &= d <= max_d
    return soup.subset(keep)


# --- enumeration oracle -------------------------------------------------------

ENUM_MAX_VERTICES = 12
ENUM_MAX_LENGTH = 16


def loop_mass_series(region: Region, min_length: int = 1, tol: float = 1e-15) -> Tuple[float, float]:
    """``sum_{m >= min_length} tr(P^m) / m`` by direct summation.

    Returns ``(value, remainder_bound)``; the remainder after the last summed
    term is bounded by the geometric tail ``n rho^(M+1) / ((M+1)(1 - rho))``.
    """
    n = len(region)
    if n == 0:
        return 0.0, 0.0
    P = build_kernel(region).dense()
    rho = float(np.max(np.abs(np.linalg.eigvalsh(P))))
    total = 0.0
    Pm = np.eye(n)
    m = 0
    while True:
        m += 1
        Pm = Pm @ P
        if m >= min_length:
            total += np.trace(Pm) / m
        bound = n * rho ** (m + 1) / ((m + 1) * (1 - rho))
        if m >= min_length and bound < tol:
            return total, bound


def enumeration_sampler(region: Region, alpha: float, L_max: int,
                        seed: SeedLike = 0) -> Tuple[LoopSoup, float]:
    """Sample the soup restricted to rooted loops of length ``<= L_max`` directly.

    Every rooted loop of length ``m`` carries an independent
    Poisson(alpha * 4**-m / m) multiplicity. Loops sharing ``(root, m)`` have
    equal weight, so their total is drawn as one Poisson variable (rate times
    the exact number of closed walks) and each copy is a uniform closed walk,
    drawn with exact path counts.

    Returns
    -------
    soup : LoopSoup
    deficit : float
        ``alpha`` times the mass of the loops longer than ``L_max``.
    """
    n = len(region)
    if n > ENUM_MAX_VERTICES or L_max > ENUM_MAX_LENGTH:
        raise ValueError(f"enumeration is limited to {ENUM_MAX_VERTICES} vertices "
                         f"and length {ENUM_MAX_LENGTH}")
    if alpha < 0 or L_max < 0:
        raise ValueError("alpha and L_max must be non-negative")
    key = seed_key(seed)
    rng = make_rng(key)
    tail, A, walks = _enumeration_tables(region, L_max)
    deficit = alpha * tail
    if n == 0 or L_max < 2:
        return LoopSoup.empty(region, alpha, seed=key, provenance="enumeration"), deficit
    verts = region.coords
    loops = []
    for root in range(n):
        for m in range(2, L_max + 1, 2):
            count = int(walks[m][root, root])
            if count == 0:
                continue
            k = rng.poisson(alpha * count * 4.0 ** -m / m)
            for _ in range(k):
                loops.append(verts[_uniform_closed_walk(rng, A, walks, root, m)])
    soup = LoopSoup.from_loops(loops, region, alpha, seed=key, provenance="enumeration")
    return soup, deficit


@lru_cache(maxsize=32)
def _enumeration_tables(region: Region, L_max: int):
    """Tail mass beyond ``L_max``, 0/1 adjacency and walk counts ``walks[s][u, v]``."""
    tail, _ = loop_mass_series(region, min_length=L_max + 1)
    if len(region) == 0:
        return tail, None, None
    A = (build_kernel(region).dense() * 4).round().astype(np.int64)
    walks = [np.eye(len(region), dtype=np.int64)]
    for _ in range(L_max):
        walks.append(walks[-1] @ A)
    return tail, A, walks


def _uniform_closed_walk(rng, A, walks, root, m):
    path = [root]
    u = root
    for s in range(m, 1, -1):
        nbrs = np.flatnonzero(A[u])
        w = walks[s - 1][nbrs, root].astype(float)
        u = int(nbrs[rng.choice(len(nbrs), p=w / w.sum())])
        path.append(u)
    return path


# --- serialization ------------------------------------------------------------

def write_soup(soup: LoopSoup, fh) -> None:
    """Text format: a header line, then ``root_x root_y : dx dy dx dy ...`` per loop.

    The step list includes the closing step back to the root.
    """
    seed = ",".join(map(str, soup.seed)) if soup.seed is not None else ""
    fh.write(f"# region={soup.region.content_hash()} alpha={soup.alpha!r} seed={seed} "
             f"provenance={soup.provenance} loops={len(soup)}\n")
    for loop in soup:
        v = loop.vertices
        steps = np.roll(v, -1, axis=0) - v
        fh.write(f"{v[0, 0]} {v[0, 1]} : {' '.join(map(str, steps.ravel().tolist()))}\n")


def read_soup(fh, region: Optional[Region] = None) -> LoopSoup:
    header = fh.readline()
    if not header.startswith("#"):
        raise ValueError("missing soup header line")
    meta = dict(tok.split("=", 1) for tok in header[1:].split())
    loops = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        head, _, tail = line.partition(":")
        root = np.array(head.split(), dtype=np.int64)
        steps = np.array(tail.split(), dtype=np.int64).reshape(-1, 2)
        v = root + np.concatenate([np.zeros((1, 2), dtype=np.int64), np.cumsum(steps[:-1], axis=0)])
        if not np.array_equal(v[-1] + steps[-1], root):
            raise ValueError("loop does not close")
        loops.append(DiscreteLoop(v))
    seed = tuple(int(s) for s in meta.get("seed", "").split(",") if s) or None
    soup = LoopSoup.from_loops(loops, region, float(meta.get("alpha", "0")),
                               seed=seed, provenance=meta.get("provenance", ""))
    if region is not None and meta.get("region") not in (None, region.content_hash()):
        raise ValueError("soup was sampled on a different region")
    return soup

