"""
Special crossing events on a block at scale N.

A block is the exterior rectangle ``N * Q_EXT`` with interior ``N * Q_INT``,
optionally rotated by +pi/2 and translated. Loops are mapped back to the
canonical frame, where the three events read:

C1
    a cluster of loops inside ``N*(1,5)x(1,2)`` is met by a loop inside the band
    ``N*(0,6)x(1,2)`` hitting ``{N} x (N, 2N)`` and by one hitting ``{5N} x (N, 2N)``
    (possibly the same loop);
C2
    same with the square ``N*(1,2)^2``, the band ``N*(1,2)x(0,3)`` and the
    horizontal segments at heights ``N`` and ``2N``;
C3
    as C2 with the square ``N*(4,5)x(1,2)`` and band ``N*(4,5)x(0,3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from . import _core
from .clusters import canonical_labels, segment_hits
from .geometry import (BAND_C1, BAND_C2, BAND_C3, HORIZONTAL, Q_EXT, Q_INT, SQUARE_C2,
                       SQUARE_C3, VERTICAL, RealRect, Region, Segment, rect_region,
                       transform_rect)
from .sampler import LoopSoup

# (square, band, first segment, second segment) in units of N
EVENTS = {
    "C1": (Q_INT, BAND_C1, Segment(VERTICAL, 1, 1, 2), Segment(VERTICAL, 5, 1, 2)),
    "C2": (SQUARE_C2, BAND_C2, Segment(HORIZONTAL, 1, 1, 2), Segment(HORIZONTAL, 2, 1, 2)),
    "C3": (SQUARE_C3, BAND_C3, Segment(HORIZONTAL, 1, 4, 5), Segment(HORIZONTAL, 2, 4, 5)),
}


@dataclass(frozen=True)
class BlockSpec:
    """Block at scale ``N``: canonical frame rotated (optionally) by +pi/2, then shifted by ``offset``."""

    N: int
    rotate_quarter: bool = False
    offset: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def ext(self) -> RealRect:
        return transform_rect(Q_EXT.scaled(self.N), self.rotate_quarter, self.offset)

    @property
    def interior(self) -> RealRect:
        return transform_rect(Q_INT.scaled(self.N), self.rotate_quarter, self.offset)

    def rect(self, canonical: RealRect) -> RealRect:
        """Image of a canonical rectangle (in units of N) in lattice coordinates."""
        return transform_rect(canonical.scaled(self.N), self.rotate_quarter, self.offset)

    def region(self) -> Region:
        return rect_region(self.ext, 1)

    def to_lattice(self, coords: np.ndarray) -> np.ndarray:
        x, y = coords[:, 0], coords[:, 1]
        if self.rotate_quarter:
            x, y = -y, x
        return np.column_stack([x + self.offset[0], y + self.offset[1]])

    def to_canonical(self, coords: np.ndarray) -> np.ndarray:
        u = coords[:, 0] - self.offset[0]
        v = coords[:, 1] - self.offset[1]
        if self.rotate_quarter:
            return np.column_stack([v, -u])
        return np.column_stack([u, v])

    def contained_mask(self, soup: LoopSoup) -> np.ndarray:
        """Loops lying strictly inside the exterior rectangle."""
        return _inside(soup.bboxes(), self.ext)


def _inside(b: np.ndarray, r: RealRect) -> np.ndarray:
    return (b[:, 0] > r.x_min) & (b[:, 1] < r.x_max) & (b[:, 2] > r.y_min) & (b[:, 3] < r.y_max)


@dataclass
class EventWitness:
    """Outcome of C1, C2, C3 with, for each satisfied event, loops realising it.

    Witness loop indices refer to the soup passed to the evaluator.
    """

    satisfied: Dict[str, bool] = field(default_factory=dict)
    witnesses: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    @property
    def all(self) -> bool:
        return bool(self.satisfied) and all(self.satisfied.values())

    def loops(self) -> Tuple[int, ...]:
        out = set()
        for w in self.witnesses.values():
            out.update(w)
        return tuple(sorted(out))

    def merge(self, other: "EventWitness") -> "EventWitness":
        return EventWitness({**self.satisfied, **other.satisfied},
                            {**self.witnesses, **other.witnesses})

    def to_json(self) -> dict:
        return {"satisfied": dict(self.satisfied),
                "witnesses": {k: list(v) for k, v in self.witnesses.items()}}


class _Frame:
    """Loops of a soup inside one block, in canonical coordinates."""

    def __init__(self, soup: LoopSoup, spec: BlockSpec, min_diameter: Optional[float]):
        keep = spec.contained_mask(soup)
        if min_diameter is not None:
            keep &= soup.diameters() >= min_diameter
        self.index = np.flatnonzero(keep)
        sub = soup.subset(self.index)
        sub.coords = spec.to_canonical(sub.coords)
        sub._bbox = None
        self.soup = sub
        self.N = spec.N
        self.gx = np.ascontiguousarray(sub.coords[:, 0])
        self.gy = np.ascontiguousarray(sub.coords[:, 1])
        self.w = 6 * spec.N + 1
        self.h = 3 * spec.N + 1


def _evaluate(frame: _Frame, name: str) -> EventWitness:
    square, band, seg_a, seg_b = EVENTS[name]
    soup, N = frame.soup, frame.N
    if len(soup) == 0:
        return EventWitness({name: False}, {})
    b = soup.bboxes()
    in_square = _inside(b, square.scaled(N))
    in_band = _inside(b, band.scaled(N))
    hit_a = segment_hits(soup, seg_a, N) & in_band
    hit_b = segment_hits(soup, seg_b, N) & in_band
    if not (in_square.any() and hit_a.any() and hit_b.any()):
        return EventWitness({name: False}, {})
    rep = _core.cluster_loops(frame.gx, frame.gy, soup.offsets, in_square, frame.w, frame.h)
    labels = np.full(len(soup), -1, dtype=np.int64)
    labels[in_square] = canonical_labels(rep[in_square])
    k = int(labels.max()) + 1
    grid = _core.label_grid(frame.gx, frame.gy, soup.offsets, labels, frame.w, frame.h)
    first_a = _core.reached_labels(frame.gx, frame.gy, soup.offsets, hit_a, grid, k)
    first_b = _core.reached_labels(frame.gx, frame.gy, soup.offsets, hit_b, grid, k)
    both = np.flatnonzero((first_a >= 0) & (first_b >= 0))
    if len(both) == 0:
        return EventWitness({name: False}, {})
    c = both[0]
    local = set(np.flatnonzero(labels == c).tolist()) | {int(first_a[c]), int(first_b[c])}
    wit = tuple(sorted(int(frame.index[i]) for i in local))
    return EventWitness({name: True}, {name: wit})


def eval_C1(soup: LoopSoup, spec: BlockSpec, min_diameter: Optional[float] = None) -> EventWitness:
    return _evaluate(_Frame(soup, spec, min_diameter), "C1")


def eval_C2(soup: LoopSoup, spec: BlockSpec, min_diameter: Optional[float] = None) -> EventWitness:
    return _evaluate(_Frame(soup, spec, min_diameter), "C2")


def eval_C3(soup: LoopSoup, spec: BlockSpec, min_diameter: Optional[float] = None) -> EventWitness:
    return _evaluate(_Frame(soup, spec, min_diameter), "C3")


def special_crossing(soup: LoopSoup, spec: BlockSpec, min_diameter: Optional[float] = None,
                     short_circuit: bool = False) -> EventWitness:
    """Evaluate C1, C2 and C3 on the loops of ``soup`` inside the block.

    Only loops contained in the exterior rectangle are looked at, so the
    result does not change when loops outside the block are added or removed.
    With ``short_circuit`` the evaluation stops at the first failing event and
    the remaining ones are reported as not satisfied.
    """
    frame = _Frame(soup, spec, min_diameter)
    out = EventWitness()
    for name in ("C1", "C2", "C3"):
        res = _evaluate(frame, name)
        out = out.merge(res)
        if short_circuit and not res.satisfied[name]:
            break
    for name in EVENTS:
        out.satisfied.setdefault(name, False)
    return out
