"""
Exact loop-measure quantities on a finite region.

The random walk loop measure gives mass ``4**-m / m`` to every rooted loop of
length ``m``. Restricted to loops inside a finite region ``A`` its total mass is
``sum_m tr(P**m) / m = -log det(I - P)``, where ``P`` is the simple random walk
kernel of ``Z^2`` killed outside ``A``.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .geometry import Region, Vertex

#: Largest region handled by the dense Green-function elimination.
DENSE_LIMIT = 8000

_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class ExactKernel:
    """Sub-stochastic kernel of a region in a fixed vertex ordering.

    ``P`` is a sparse CSR matrix indexed by positions in ``ordering``.
    """

    region: Region
    ordering: np.ndarray
    P: scipy.sparse.csr_matrix

    @property
    def n(self) -> int:
        return len(self.ordering)

    def dense(self) -> np.ndarray:
        return self.P.toarray()

    def position(self, v: Vertex) -> int:
        for i, w in enumerate(self.ordering.tolist()):
            if w[0] == v[0] and w[1] == v[1]:
                return i
        raise KeyError(v)


@dataclass(frozen=True)
class PointedRates:
    """Per-vertex return probabilities and loop rates for an elimination ordering.

    ``r[i]`` is the probability that simple random walk from ``ordering[i]``
    returns to it before leaving ``region`` minus the earlier vertices, and
    ``lam[i] = -log(1 - r[i])``.
    """

    region: Region
    ordering: np.ndarray
    r: np.ndarray
    lam: np.ndarray

    @property
    def total(self) -> float:
        return float(self.lam.sum())

    def to_json(self) -> dict:
        return {
            "region_hash": self.region.content_hash(),
            "key": cache_key(self.region, self.ordering),
            "region": self.region.coords.tolist(),
            "ordering": self.ordering.tolist(),
            "r": self.r.tolist(),
            "lam": self.lam.tolist(),
            "mass": self.total,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PointedRates":
        return cls(Region(np.asarray(doc["region"], dtype=np.int64).reshape(-1, 2)),
                   np.asarray(doc["ordering"], dtype=np.int64).reshape(-1, 2),
                   np.asarray(doc["r"], dtype=float),
                   np.asarray(doc["lam"], dtype=float))


def build_kernel(region: Region, ordering: Optional[Sequence[Vertex]] = None) -> ExactKernel:
    """Build the killed simple random walk kernel of ``region``.

    Parameters
    ----------
    region : Region
    ordering : sequence of vertices, optional
        Any enumeration of the region; defaults to lexicographic ``(y, x)``.
    """
    if ordering is None:
        order = region.coords.copy()
    else:
        order = np.asarray(ordering, dtype=np.int64).reshape(-1, 2)
        if len(order) != len(region) or Region(order) != region:
            raise ValueError("ordering must enumerate the region exactly once")
    n = len(order)
    pos = {(int(x), int(y)): i for i, (x, y) in enumerate(order.tolist())}
    rows, cols = [], []
    for i, (x, y) in enumerate(order.tolist()):
        for dx, dy in _NEIGHBOURS:
            j = pos.get((x + dx, y + dy))
            if j is not None:
                rows.append(i)
                cols.append(j)
    P = scipy.sparse.csr_matrix((np.full(len(rows), 0.25), (rows, cols)), shape=(n, n))
    order.setflags(write=False)
    return ExactKernel(region, order, P)


def total_loop_mass(kernel: ExactKernel) -> float:
    """Total mass ``-log det(I - P)`` of the loops contained in the region."""
    n = kernel.n
    if n == 0:
        return 0.0
    if n <= 2000:
        sign, logdet = np.linalg.slogdet(np.eye(n) - kernel.dense())
    else:
        # symmetric ordering without pivoting keeps U's diagonal positive for SPD input
        lu = scipy.sparse.linalg.splu(
            (scipy.sparse.identity(n, format="csc") - kernel.P).tocsc(),
            permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
            options={"SymmetricMode": True})
        d = lu.U.diagonal()
        sign = np.prod(np.sign(d))
        logdet = np.log(np.abs(d)).sum()
    if sign <= 0:
        raise FloatingPointError("I - P is not positive definite")
    return float(-logdet)


def pointed_rates(kernel: ExactKernel, method: str = "auto") -> PointedRates:
    """Return probabilities ``r_i`` under sequential removal of the ordering.

    Parameters
    ----------
    method : {'auto', 'green', 'cholesky'}
        ``'green'`` maintains the Green function of the surviving set and
        removes one vertex at a time with a rank-one update; it is the
        reference path and is limited to ``DENSE_LIMIT`` vertices.
        ``'cholesky'`` reads the same quantities off the pivots of a Cholesky
        factorisation taken in reversed order (banded when the ordering allows).
        ``'auto'`` picks ``'green'`` for small regions.
    """
    n = kernel.n
    if method == "auto":
        method = "green" if n <= 1500 else "cholesky"
    if method == "green":
        r = _rates_green(kernel)
    elif method == "cholesky":
        r = _rates_cholesky(kernel)
    else:
        raise ValueError(f"unknown method {method!r}")
    r = np.clip(r, 0.0, None)
    # isolated vertices come out as ~1e-17 noise; there are no loops there
    r[r < 1e-14] = 0.0
    lam = -np.log1p(-r)
    return PointedRates(kernel.region, kernel.ordering, r, lam)


def _rates_green(kernel: ExactKernel) -> np.ndarray:
    n = kernel.n
    if n > DENSE_LIMIT:
        raise ValueError(f"dense elimination is capped at {DENSE_LIMIT} vertices, got {n}")
    r = np.zeros(n)
    if n == 0:
        return r
    G = np.linalg.inv(np.eye(n) - kernel.dense())
    for i in range(n):
        g = G[i, i]
        r[i] = 1.0 - 1.0 / g
        col = G[i + 1:, i]
        G[i + 1:, i + 1:] -= np.outer(col, G[i, i + 1:]) / g
    return r


def _rates_cholesky(kernel: ExactKernel) -> np.ndarray:
    # Pivot k of a Cholesky factorisation in the order v_n, ..., v_1 is the
    # Schur complement 1 / G_{v_k..v_n}(v_k, v_k).
    n = kernel.n
    if n == 0:
        return np.zeros(0)
    A = (scipy.sparse.identity(n, format="csr") - kernel.P)[::-1, ::-1].tocoo()
    bw = int(np.abs(A.row - A.col).max()) if A.nnz else 0
    if bw < n // 4:
        ab = np.zeros((bw + 1, n))
        # upper banded storage: ab[bw + i - j, j] = A[i, j] for i <= j
        up = A.row <= A.col
        ab[bw + A.row[up] - A.col[up], A.col[up]] = A.data[up]
        c = scipy.linalg.cholesky_banded(ab, lower=False)
        piv = c[bw] ** 2
    else:
        c = scipy.linalg.cholesky(A.toarray(), lower=True)
        piv = np.diag(c) ** 2
    return 1.0 - piv[::-1]


def vertex_hit_mass(kernel: ExactKernel, v: Vertex) -> float:
    """Mass of the loops in the region that visit ``v``."""
    if v not in kernel.region:
        raise ValueError(f"vertex {v} is not in the region")
    inner = kernel.region.without(v)
    return total_loop_mass(kernel) - total_loop_mass(build_kernel(inner))


def edge_backforth_mass() -> float:
    """Mass of the loops whose range is exactly one fixed edge: ``log(16/15)``."""
    return math.log(16.0 / 15.0)


def cache_key(region: Region, ordering: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(region.coords, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(ordering, dtype=np.int64).tobytes())
    return h.hexdigest()[:24]


def save_rates(rates: PointedRates, path: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        json.dump(rates.to_json(), fh)
    os.replace(tmp, path)


def load_rates(path: str) -> PointedRates:
    with open(path) as fh:
        return PointedRates.from_json(json.load(fh))


def cached_pointed_rates(region: Region, cache_dir: Optional[str] = None,
                         ordering: Optional[Sequence[Vertex]] = None) -> PointedRates:
    """``pointed_rates(build_kernel(region, ordering))``, memoised on disk when ``cache_dir`` is set."""
    kernel = build_kernel(region, ordering)
    if cache_dir is None:
        return pointed_rates(kernel)
    path = os.path.join(cache_dir, f"rates-{cache_key(region, kernel.ordering)}.json")
    if os.path.exists(path):
        return load_rates(path)
    rates = pointed_rates(kernel)
    os.makedirs(cache_dir, exist_ok=True)
    save_rates(rates, path)
    return rates
