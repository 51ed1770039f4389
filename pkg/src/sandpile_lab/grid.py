"""Geometry of the sinked hypercubic grid.

Vertices are the points of ``{1..n}^d``; every boundary face carries an edge to
a single virtual sink so that each vertex has degree ``2d``.  Public code uses
1-based coordinate tuples, storage is a flat row-major 0-based index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

Vertex = tuple[int, ...]

SINK = -1


@dataclass(frozen=True)
class GridShape:
    n: int
    d: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"side length must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.d!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "d", int(self.d))

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def degree(self) -> int:
        return 2 * self.d

    @property
    def bandwidth(self) -> int:
        """Largest index offset between adjacent vertices."""
        return self.n ** (self.d - 1)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def index(self, v: Sequence[int]) -> int:
        v = self.check(v)
        return int(np.ravel_multi_index(tuple(c - 1 for c in v), self.dims))

    def vertex(self, idx: int) -> Vertex:
        return tuple(int(c) + 1 for c in np.unravel_index(int(idx), self.dims))

    def check(self, v: Sequence[int]) -> Vertex:
        v = tuple(int(c) for c in v)
        if len(v) != self.d:
            raise ValueError(f"vertex {v} has {len(v)} coordinates, grid has d={self.d}")
        if any(c < 1 or c > self.n for c in v):
            raise ValueError(f"vertex {v} outside {{1..{self.n}}}^{self.d}")
        return v

    def vertices(self) -> Iterator[Vertex]:
        for idx in range(self.size):
            yield self.vertex(idx)

    def corner(self, value: int = 1) -> Vertex:
        return (value,) * self.d

    def far_corner(self) -> Vertex:
        return (self.n,) * self.d

    def sink_edges_of(self, v: Sequence[int]) -> int:
        v = self.check(v)
        return sum((c == 1) + (c == self.n) for c in v)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """``(size, 2d)`` table of neighbour indices, ``SINK`` marks a sink edge."""
        coords = np.indices(self.dims).reshape(self.d, -1)
        table = np.full((self.size, 2 * self.d), SINK, dtype=np.int64)
        for axis in range(self.d):
            for slot, step in ((2 * axis, -1), (2 * axis + 1, 1)):
                moved = coords.copy()
                moved[axis] += step
                ok = (moved[axis] >= 0) & (moved[axis] < self.n)
                flat = np.ravel_multi_index(tuple(np.where(ok, moved, 0)), self.dims)
                table[:, slot] = np.where(ok, flat, SINK)
        table.setflags(write=False)
        return table

    @cached_property
    def sink_edges(self) -> np.ndarray:
        counts = (self.neighbors == SINK).sum(axis=1).astype(np.int64)
        counts.setflags(write=False)
        return counts

    def quadrant(self) -> list[Vertex]:
        """Vertices with every coordinate in ``1..ceil(n/2)``."""
        half = -(-self.n // 2)
        sub = GridShape(half, self.d)
        return list(sub.vertices())


def parse_vertex(text: str) -> Vertex:
    """Parse ``"r,c[,...]"`` into a coordinate tuple."""
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad vertex {text!r}; expected comma separated integers") from exc
