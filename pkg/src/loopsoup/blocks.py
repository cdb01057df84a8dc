"""
Block renormalization: the edge percolation induced by special crossings.

Block nodes are ``(j, k)`` with ``0 <= j < mx`` and ``1 <= k <= my``. Node
``(j, k)`` owns the lattice square ``3N(j, k) + N(1, 2)^2``. A horizontal edge
``(j, k)-(j+1, k)`` is open when the special crossing event holds in the block
``N * Q_EXT`` shifted by ``(3Nj, 3Nk)``; for a vertical edge ``(j, k)-(j, k+1)``
the block is rotated by +pi/2 and shifted by ``(3N(j+1), 3Nk)``, so that the
two small squares of every block are exactly the squares of its end nodes.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .clusters import build_clusters
from .events import BlockSpec, special_crossing
from .geometry import Q_EXT, RealRect, rect_region
from .kernel import PointedRates, build_kernel, pointed_rates
from .rng import SeedLike, map_replicas, seed_key
from .sampler import LoopSoup, SamplerConfig, sample_soup

Node = Tuple[int, int]
Edge = Tuple[Node, Node]


@dataclass(frozen=True)
class BlockGrid:
    """Finite piece ``{0..mx-1} x {1..my}`` of the half-plane block lattice."""

    mx: int
    my: int

    def __post_init__(self):
        if self.mx < 1 or self.my < 1:
            raise ValueError("grid dimensions must be positive")

    def nodes(self) -> List[Node]:
        return [(j, k) for k in range(1, self.my + 1) for j in range(self.mx)]

    def horizontal_edges(self) -> List[Edge]:
        return [((j, k), (j + 1, k)) for k in range(1, self.my + 1) for j in range(self.mx - 1)]

    def vertical_edges(self) -> List[Edge]:
        return [((j, k), (j, k + 1)) for k in range(1, self.my) for j in range(self.mx)]

    def edges(self) -> List[Edge]:
        return self.horizontal_edges() + self.vertical_edges()

    def block(self, edge: Edge, N: int) -> BlockSpec:
        return edge_block(edge, N)

    def hull(self, N: int) -> RealRect:
        """Smallest rectangle containing every block's exterior rectangle."""
        return RealRect(0, 3 * N * self.mx, 3 * N, 3 * N * (self.my + 1))


def edge_block(edge: Edge, N: int) -> BlockSpec:
    (j, k), (j2, k2) = edge
    if (j2, k2) == (j + 1, k):
        return BlockSpec(N, False, (3 * N * j, 3 * N * k))
    if (j2, k2) == (j, k + 1):
        return BlockSpec(N, True, (3 * N * (j + 1), 3 * N * k))
    raise ValueError(f"{edge!r} is not an oriented block-lattice edge")


@dataclass
class OmegaField:
    """Edge configuration of the block percolation.

    ``witnesses[e]`` lists loop indices (into the soup the field was built
    from) realising the crossing events of the open edge ``e``; empty in
    independent mode.
    """

    grid: BlockGrid
    values: Dict[Edge, bool]
    mode: str
    N: int
    alpha: float
    seed: Optional[tuple] = None
    witnesses: Dict[Edge, Tuple[int, ...]] = field(default_factory=dict)

    def open_edges(self) -> List[Edge]:
        return [e for e in self.grid.edges() if self.values[e]]

    @property
    def open_fraction(self) -> float:
        n = len(self.values)
        return sum(self.values.values()) / n if n else 0.0

    def to_text(self) -> str:
        """0/1 matrix export: an ``H`` section (rows k = 1..my, mx - 1 columns)
        and a ``V`` section (rows k = 1..my-1, mx columns)."""
        g = self.grid
        lines = [f"# mode={self.mode} N={self.N} alpha={self.alpha!r} grid={g.mx}x{g.my}", "H"]
        for k in range(1, g.my + 1):
            lines.append(" ".join(str(int(self.values[((j, k), (j + 1, k))]))
                                  for j in range(g.mx - 1)))
        lines.append("V")
        for k in range(1, g.my):
            lines.append(" ".join(str(int(self.values[((j, k), (j, k + 1))]))
                                  for j in range(g.mx)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OmegaField":
        rows = text.splitlines()
        meta = dict(tok.split("=", 1) for tok in rows[0].lstrip("#").split())
        mx, my = (int(s) for s in meta["grid"].split("x"))
        grid = BlockGrid(mx, my)
        h = rows.index("H")
        v = rows.index("V")
        values = {}
        for k, row in enumerate(rows[h + 1:v], start=1):
            for j, s in enumerate(row.split()):
                values[((j, k), (j + 1, k))] = s == "1"
        for k, row in enumerate(rows[v + 1:], start=1):
            for j, s in enumerate(row.split()):
                values[((j, k), (j, k + 1))] = s == "1"
        if set(values) != set(grid.edges()):
            raise ValueError("omega text does not match its grid")
        return cls(grid, values, meta["mode"], int(meta["N"]), float(meta["alpha"]))


@lru_cache(maxsize=16)
def _hull_rates(N: int, mx: int, my: int) -> PointedRates:
    return pointed_rates(build_kernel(rect_region(BlockGrid(mx, my).hull(N), 1)))


@lru_cache(maxsize=16)
def block_rates(N: int) -> PointedRates:
    """Rates of the canonical block ``N * Q_EXT``."""
    return pointed_rates(build_kernel(rect_region(Q_EXT, N)))


def sample_hull_soup(N: int, alpha: float, grid: BlockGrid, seed: SeedLike = 0,
                     config: Optional[SamplerConfig] = None) -> LoopSoup:
    """Soup on the discretized hull; by the restriction property it is the
    half-plane soup seen through the loops contained in the hull."""
    return sample_soup(_hull_rates(N, grid.mx, grid.my), alpha, seed, config)


def build_omega_global(soup: LoopSoup, N: int, grid: BlockGrid,
                       min_diameter: Optional[float] = None) -> OmegaField:
    """Evaluate every edge of ``grid`` on one shared soup.

    Raises
    ------
    ValueError
        If some block exterior rectangle has vertices missing from the soup's region.
    """
    hull_region = rect_region(grid.hull(N), 1)
    if not hull_region.issubset(soup.region):
        raise ValueError("soup region does not cover the block grid hull")
    values, wits = {}, {}
    for e in grid.edges():
        res = special_crossing(soup, edge_block(e, N), min_diameter=min_diameter)
        values[e] = res.all
        if res.all:
            wits[e] = res.loops()
    return OmegaField(grid, values, "global", N, soup.alpha, soup.seed, wits)


def _independent_edge(args) -> bool:
    N, alpha, key, config = args
    soup = sample_soup(block_rates(N), alpha, key, config)
    return special_crossing(soup, BlockSpec(N)).all


def build_omega_independent(N: int, alpha: float, grid: BlockGrid, seed: SeedLike = 0,
                            config: Optional[SamplerConfig] = None,
                            workers: int = 1) -> OmegaField:
    """i.i.d. surrogate: a fresh canonical-block soup for every edge.

    Marginals equal those of the global field; correlations are dropped.
    Edge ``t`` (in ``grid.edges()`` order) uses substream ``(seed, t)``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    key = seed_key(seed)
    edges = grid.edges()
    if alpha == 0:
        return OmegaField(grid, {e: False for e in edges}, "independent", N, alpha, key)
    block_rates(N)
    flags = map_replicas(_independent_edge,
                         [(N, alpha, key + (t,), config) for t in range(len(edges))], workers)
    return OmegaField(grid, dict(zip(edges, flags)), "independent", N, alpha, key)


def _adjacency(omega: OmegaField) -> Dict[Node, List[Node]]:
    adj = {v: [] for v in omega.grid.nodes()}
    for a, b in omega.open_edges():
        adj[a].append(b)
        adj[b].append(a)
    return adj


def open_components(omega: OmegaField) -> List[List[Edge]]:
    """Open edges grouped by connected component of the open subgraph."""
    adj = _adjacency(omega)
    comp = {}
    for v in omega.grid.nodes():
        if v in comp or not adj[v]:
            continue
        comp[v] = v
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in comp:
                    comp[w] = v
                    queue.append(w)
    groups: Dict[Node, List[Edge]] = {}
    for e in omega.open_edges():
        groups.setdefault(comp[e[0]], []).append(e)
    return list(groups.values())


def spanning_open_path(omega: OmegaField) -> Tuple[bool, List[Node]]:
    """Left-to-right open crossing of the grid.

    Breadth-first search from every node of column 0; returns a shortest open
    path to column ``mx - 1`` (as a node list) or ``(False, [])``.
    """
    g = omega.grid
    adj = _adjacency(omega)
    start = [(0, k) for k in range(1, g.my + 1)]
    prev = {v: None for v in start}
    queue = deque(start)
    while queue:
        u = queue.popleft()
        if u[0] == g.mx - 1:
            path = [u]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return True, path[::-1]
        for w in adj[u]:
            if w not in prev:
                prev[w] = u
                queue.append(w)
    return False, []


def witness_connectivity_check(omega: OmegaField, soup: LoopSoup) -> bool:
    """Every open component's witness loops form a single cluster.

    The witnesses of a component are clustered among themselves, which is
    stronger than asking for one cluster of the whole soup.
    """
    if omega.mode != "global":
        raise ValueError("witnesses exist only for global-mode fields")
    for comp in open_components(omega):
        loops = sorted(set().union(*(omega.witnesses[e] for e in comp)))
        part = build_clusters(soup.subset(np.asarray(loops, dtype=np.int64)))
        if part.n_clusters != 1:
            return False
    return True


LSS_SCHEMES = ("heuristic", "identity")


def lss_dominated_p(p: float, scheme: str = "heuristic") -> float:
    """Lower bound for the i.i.d. parameter dominated by a 1-dependent field.

    ``"heuristic"`` is ``max(0, 1 - 2 sqrt(1 - p))``: monotone, zero for
    ``p <= 3/4`` and tending to 1 as ``p -> 1``. It is a placeholder with the
    right limits, not a proven bound. ``"identity"`` returns ``p`` and is only
    meaningful for independent fields.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if scheme == "heuristic":
        return max(0.0, 1.0 - 2.0 * math.sqrt(1.0 - p))
    if scheme == "identity":
        return float(p)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {LSS_SCHEMES}")
