"""
Lattice primitives on the discrete half-plane Z x N*.

Vertices are plain ``(x, y)`` integer pairs with ``y >= 1``. Loops are stored
as ``(n, 2)`` integer arrays listing the visited vertices ``z_0, ..., z_{n-1}``;
the return step ``z_{n-1} -> z_0`` is implicit.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

Vertex = Tuple[int, int]

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class RealRect:
    """Open rectangle ``(x_min, x_max) x (y_min, y_max)``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate rectangle {self!r}")

    def scaled(self, N: float) -> "RealRect":
        return RealRect(N * self.x_min, N * self.x_max, N * self.y_min, N * self.y_max)

    def translated(self, dx: float, dy: float) -> "RealRect":
        return RealRect(self.x_min + dx, self.x_max + dx, self.y_min + dy, self.y_max + dy)

    def contains_rect(self, other: "RealRect") -> bool:
        return (self.x_min <= other.x_min and other.x_max <= self.x_max
                and self.y_min <= other.y_min and other.y_max <= self.y_max)


#: Exterior and interior rectangles of the special crossing event.
Q_EXT = RealRect(0, 6, 0, 3)
Q_INT = RealRect(1, 5, 1, 2)
#: Horizontal band hosting the loops that reach the interior cluster for C1.
BAND_C1 = RealRect(0, 6, 1, 2)
SQUARE_C2 = RealRect(1, 2, 1, 2)
BAND_C2 = RealRect(1, 2, 0, 3)
SQUARE_C3 = RealRect(4, 5, 1, 2)
BAND_C3 = RealRect(4, 5, 0, 3)


@dataclass(frozen=True)
class Segment:
    """Open axis-parallel segment.

    A vertical segment is ``{line} x (a, b)``, a horizontal one ``(a, b) x {line}``.
    """

    orientation: str
    line: float
    a: float
    b: float

    def __post_init__(self):
        if self.orientation not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if not self.a < self.b:
            raise ValueError("segment needs a < b")


def rotate_point(x, y):
    """Rotation by +pi/2 about the origin: (x, y) -> (-y, x)."""
    return -y, x


def transform_rect(rect: RealRect, rotate_quarter: bool = False,
                   translation: Tuple[float, float] = (0.0, 0.0)) -> RealRect:
    """Rotate (optionally) by +pi/2 and then translate a rectangle.

    >>> transform_rect(Q_EXT, True, (0, 0))
    RealRect(x_min=-3, x_max=0, y_min=0, y_max=6)
    """
    x0, x1, y0, y1 = rect.x_min, rect.x_max, rect.y_min, rect.y_max
    if rotate_quarter:
        x0, x1, y0, y1 = -y1, -y0, x0, x1
    dx, dy = translation
    return RealRect(x0 + dx, x1 + dx, y0 + dy, y1 + dy)


def transform_segment(seg: Segment, rotate_quarter: bool = False,
                      translation: Tuple[float, float] = (0.0, 0.0)) -> Segment:
    dx, dy = translation
    if not rotate_quarter:
        if seg.orientation == VERTICAL:
            return Segment(VERTICAL, seg.line + dx, seg.a + dy, seg.b + dy)
        return Segment(HORIZONTAL, seg.line + dy, seg.a + dx, seg.b + dx)
    # {c} x (a, b) rotates to (-b, -a) x {c}; (a, b) x {c} rotates to {-c} x (a, b)
    if seg.orientation == VERTICAL:
        return Segment(HORIZONTAL, seg.line + dy, -seg.b + dx, -seg.a + dx)
    return Segment(VERTICAL, -seg.line + dx, seg.a + dy, seg.b + dy)


class Region:
    """Finite set of half-plane vertices.

    The vertices are kept sorted lexicographically by ``(y, x)``, which is also
    the default elimination ordering used by :mod:`loopsoup.kernel`.
    """

    __slots__ = ("coords", "_index", "_hash")

    def __init__(self, vertices: Iterable[Vertex] | np.ndarray = ()):
        arr = np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices,
                         dtype=np.int64).reshape(-1, 2)
        if arr.size and arr[:, 1].min() < 1:
            raise ValueError("region vertices must satisfy y >= 1")
        if arr.size:
            arr = np.unique(arr, axis=0)
            arr = arr[np.lexsort((arr[:, 0], arr[:, 1]))]
        arr.setflags(write=False)
        self.coords = arr
        self._index = None
        self._hash = None

    @classmethod
    def box(cls, x0: int, x1: int, y0: int, y1: int) -> "Region":
        """Closed integer box ``{x0..x1} x {y0..y1}`` intersected with the half-plane."""
        y0 = max(y0, 1)
        if x1 < x0 or y1 < y0:
            return cls()
        xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        return cls(np.column_stack([xs.ravel(), ys.ravel()]))

    def __len__(self):
        return len(self.coords)

    def __iter__(self) -> Iterator[Vertex]:
        return (tuple(v) for v in self.coords.tolist())

    def __contains__(self, v) -> bool:
        return self.index_map().get((int(v[0]), int(v[1]))) is not None

    def __eq__(self, other):
        return isinstance(other, Region) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.content_hash())

    def __repr__(self):
        return f"Region(n={len(self)}, bbox={self.bbox()})"

    def index_map(self) -> dict:
        if self._index is None:
            self._index = {v: i for i, v in enumerate(self)}
        return self._index

    def bbox(self) -> Optional[Tuple[int, int, int, int]]:
        """``(x_min, x_max, y_min, y_max)`` of the vertices, or ``None`` if empty."""
        if not len(self):
            return None
        c = self.coords
        return int(c[:, 0].min()), int(c[:, 0].max()), int(c[:, 1].min()), int(c[:, 1].max())

    def issubset(self, other: "Region") -> bool:
        idx = other.index_map()
        return all(v in idx for v in self)

    def without(self, v: Vertex) -> "Region":
        keep = ~((self.coords[:, 0] == v[0]) & (self.coords[:, 1] == v[1]))
        return Region(self.coords[keep])

    def content_hash(self) -> str:
        if self._hash is None:
            self._hash = hashlib.sha256(np.ascontiguousarray(self.coords).tobytes()).hexdigest()[:16]
        return self._hash


def rect_region(rect: RealRect, N: int = 1) -> Region:
    """Lattice vertices strictly inside ``N * rect`` and in the half-plane.

    >>> len(rect_region(Q_EXT, 1))
    10
    """
    if N < 1:
        raise ValueError("scale N must be >= 1")
    r = rect.scaled(N)
    x0 = int(np.floor(r.x_min)) + 1
    x1 = int(np.ceil(r.x_max)) - 1
    y0 = int(np.floor(r.y_min)) + 1
    y1 = int(np.ceil(r.y_max)) - 1
    return Region.box(x0, x1, y0, y1)


class DiscreteLoop:
    """Closed nearest-neighbour lattice path, rooted at ``vertices[0]``.

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
        Visited vertices ``z_0, ..., z_{n-1}``; the closing step back to
        ``z_0`` is implicit. ``n`` is the number of jumps.
    check : bool
        Validate the loop invariants (nearest-neighbour steps, even length,
        at least two vertices, ``y >= 1``).
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices, check: bool = True):
        v = np.asarray(vertices, dtype=np.int64).reshape(-1, 2)
        if check:
            _check_loop(v)
        self.vertices = v

    @property
    def n_steps(self) -> int:
        return len(self.vertices)

    @property
    def root(self) -> Vertex:
        return int(self.vertices[0, 0]), int(self.vertices[0, 1])

    def range(self) -> frozenset:
        return frozenset(map(tuple, self.vertices.tolist()))

    def rerooted(self, k: int) -> "DiscreteLoop":
        return DiscreteLoop(np.roll(self.vertices, -k, axis=0), check=False)

    def reversed(self) -> "DiscreteLoop":
        v = self.vertices
        return DiscreteLoop(np.concatenate([v[:1], v[:0:-1]]), check=False)

    def __len__(self):
        return self.n_steps

    def __eq__(self, other):
        return isinstance(other, DiscreteLoop) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return f"DiscreteLoop(root={self.root}, n_steps={self.n_steps})"


def _check_loop(v: np.ndarray):
    n = len(v)
    if n < 2 or n % 2:
        raise ValueError(f"a loop needs an even number >= 2 of jumps, got {n}")
    if v[:, 1].min() < 1:
        raise ValueError("loop leaves the half-plane")
    steps = np.abs(np.roll(v, -1, axis=0) - v).sum(axis=1)
    if not np.all(steps == 1):
        raise ValueError("consecutive loop vertices must be nearest neighbours")


def loop_diameter(loop: DiscreteLoop) -> int:
    """L-infinity diameter of the set of visited vertices."""
    v = loop.vertices
    return int(max(np.ptp(v[:, 0]), np.ptp(v[:, 1])))


def loop_hits_segment(loop: DiscreteLoop, seg: Segment, N: int = 1) -> bool:
    """Whether the loop visits a vertex on the scaled segment's line, strictly inside it."""
    v = loop.vertices
    if seg.orientation == VERTICAL:
        on, along = v[:, 0], v[:, 1]
    else:
        on, along = v[:, 1], v[:, 0]
    hit = (on == N * seg.line) & (along > N * seg.a) & (along < N * seg.b)
    return bool(hit.any())


def loop_contained(loop: DiscreteLoop, region: Region) -> bool:
    idx = region.index_map()
    return all(v in idx for v in map(tuple, loop.vertices.tolist()))


def vertices_in_rect(coords: np.ndarray, rect: RealRect, N: int = 1) -> np.ndarray:
    """Boolean mask of vertices strictly inside ``N * rect``."""
    x, y = coords[:, 0], coords[:, 1]
    return ((x > N * rect.x_min) & (x < N * rect.x_max)
            & (y > N * rect.y_min) & (y < N * rect.y_max))
