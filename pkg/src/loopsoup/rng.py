"""Seeded, counter-based random streams.

Every stochastic routine draws from ``Philox`` generators keyed by a tuple
``(master_seed, *indices)``, so replica ``j`` of a run sees the same stream no
matter how replicas are scheduled across workers.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int]]


def seed_key(seed: SeedLike, *indices: int) -> tuple:
    if isinstance(seed, (int, np.integer)):
        key = (int(seed),)
    else:
        key = tuple(int(s) for s in seed)
    key = key + tuple(int(i) for i in indices)
    if any(k < 0 for k in key):
        raise ValueError("seeds and stream indices must be non-negative")
    return key


def make_rng(seed: SeedLike, *indices: int) -> np.random.Generator:
    """Philox generator for the substream ``(seed, *indices)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_key(seed, *indices))))


def map_replicas(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """``[fn(item) for item in items]``, optionally spread over processes.

    Output order follows ``items``; with per-replica substreams the result does
    not depend on ``workers``.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
