"""Abelian sandpile dynamics on sinked grids.

Configurations are immutable snapshots; every operation returns fresh
objects.  Toppling is done by compiled kernels in :mod:`sandpile_lab._kernels`.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .grid import GridShape, Vertex

INT64_MAX = int(np.iinfo(np.int64).max)

PALETTE = ((255, 255, 255), (80, 160, 255), (255, 200, 60), (160, 40, 40))


def _frozen(arr: np.ndarray) -> np.ndarray:
    # private copy so the caller's buffer stays writable
    arr = np.array(arr, dtype=np.int64, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Config:
    shape: GridShape
    grains: np.ndarray

    def __post_init__(self):
        grains = np.asarray(self.grains)
        if grains.shape != (self.shape.size,):
            grains = grains.reshape(-1)
        if grains.shape != (self.shape.size,):
            raise ValueError(f"expected {self.shape.size} grain counts, got {grains.size}")
        if grains.size and grains.min() < 0:
            raise ValueError("grain counts must be nonnegative")
        object.__setattr__(self, "grains", _frozen(grains))

    def __eq__(self, other):
        if not isinstance(other, Config):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.grains, other.grains)

    def __hash__(self):
        return hash((self.shape, self.grains.tobytes()))

    def __getitem__(self, v: Sequence[int]) -> int:
        return int(self.grains[self.shape.index(v)])

    def is_stable(self) -> bool:
        return bool((self.grains < self.shape.degree).all())

    def total(self) -> int:
        return int(self.grains.sum())

    def as_array(self) -> np.ndarray:
        """Grain counts reshaped to ``(n,)*d``."""
        return self.grains.reshape(self.shape.dims)

    def with_grains(self, v: Sequence[int], k: int) -> "Config":
        if k < 0:
            raise ValueError("cannot remove grains")
        idx = self.shape.index(v)
        grains = self.grains.copy()
        if grains[idx] > INT64_MAX - k:
            raise OverflowError("grain counter overflow")
        grains[idx] += k
        return Config(self.shape, grains)


@dataclass(frozen=True, eq=False)
class Odometer:
    shape: GridShape
    topples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "topples", _frozen(self.topples))

    def __eq__(self, other):
        if not isinstance(other, Odometer):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.topples, other.topples)

    def __hash__(self):
        return hash((self.shape, self.topples.tobytes()))

    def __getitem__(self, v: Sequence[int]) -> int:
        return int(self.topples[self.shape.index(v)])

    def total(self) -> int:
        return int(self.topples.sum())

    def to_sink(self) -> int:
        """Grains pushed into the sink by these topplings."""
        return int((self.topples * self.shape.sink_edges).sum())

    def support(self) -> np.ndarray:
        return self.topples > 0

    def __add__(self, other: "Odometer") -> "Odometer":
        if self.shape != other.shape:
            raise ValueError("odometers on different grids")
        return Odometer(self.shape, self.topples + other.topples)


@dataclass
class DriveReport:
    site: Vertex
    grains_added: int
    recurrent_at: int
    total_topplings: int
    wall_time: float = field(default=0.0, compare=False)

    def to_json(self, **kw) -> str:
        data = asdict(self)
        data["site"] = list(self.site)
        return json.dumps(data, **kw)


def new_config(shape: GridShape) -> Config:
    return Config(shape, np.zeros(shape.size, dtype=np.int64))


def stabilize(config: Config) -> tuple[Config, Odometer]:
    shape = config.shape
    grains = config.grains.copy()
    odo = np.zeros(shape.size, dtype=np.int64)
    _kernels.stabilize_batched(grains, shape.neighbors, shape.degree, odo)
    return Config(shape, grains), Odometer(shape, odo)


def stabilize_in_order(config: Config, seed: int) -> tuple[Config, Odometer]:
    """Stabilize by single topplings in a seeded random order (for Abelianness checks)."""
    shape = config.shape
    grains = config.grains.copy()
    odo = np.zeros(shape.size, dtype=np.int64)
    _kernels.stabilize_random_order(grains, shape.neighbors, shape.degree, odo, seed)
    return Config(shape, grains), Odometer(shape, odo)


def add_and_stabilize(config: Config, site: Sequence[int], k: int = 1) -> tuple[Config, Odometer]:
    """Drop ``k`` grains on ``site`` and stabilize.

    By the Abelian property this equals ``k`` single-grain steps with
    stabilization after each; the odometer is the sum over those steps.
    """
    if int(k) < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return stabilize(config.with_grains(site, int(k)))


def burning_test(config: Config) -> bool:
    """True iff the stable configuration is recurrent."""
    if not config.is_stable():
        raise ValueError("burning test needs a stable configuration")
    shape = config.shape
    return _kernels.burn(config.grains, shape.neighbors, shape.degree) == shape.size


def _drop(shape: GridShape, idx: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    grains = np.zeros(shape.size, dtype=np.int64)
    grains[idx] = m
    odo = np.zeros(shape.size, dtype=np.int64)
    _kernels.stabilize_batched(grains, shape.neighbors, shape.degree, odo)
    return grains, odo


def drive_to_recurrence(shape: GridShape, site: Sequence[int] | None = None) -> DriveReport:
    """Smallest grain count at ``site`` (from empty) giving a recurrent state.

    Doubling brackets the answer, then bisection pins it; every probe
    re-stabilizes from the empty configuration.
    """
    site = shape.check(site if site is not None else shape.corner())
    idx = shape.index(site)
    nbr, deg = shape.neighbors, shape.degree
    start = time.perf_counter()

    def recurrent(m):
        grains, _ = _drop(shape, idx, m)
        return _kernels.burn(grains, nbr, deg) == shape.size

    if recurrent(0):
        lo, hi = -1, 0
    else:
        lo, hi = 0, 1
        while not recurrent(hi):
            lo, hi = hi, 2 * hi
            if hi > INT64_MAX // 2:
                raise OverflowError("grain count overflow while bracketing")
    grains_added = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if recurrent(mid):
            hi = mid
        else:
            lo = mid
    _, odo = _drop(shape, idx, hi)
    return DriveReport(
        site=site,
        grains_added=grains_added,
        recurrent_at=hi,
        total_topplings=int(odo.sum()),
        wall_time=time.perf_counter() - start,
    )


# -- exhaustive state spaces -------------------------------------------------

def encode(config: Config) -> int:
    radix = config.shape.degree
    code = 0
    for g in config.grains[::-1]:
        code = code * radix + int(g)
    return code


def decode(shape: GridShape, code: int) -> Config:
    radix = shape.degree
    grains = np.empty(shape.size, dtype=np.int64)
    for u in range(shape.size):
        code, grains[u] = divmod(code, radix)
    return Config(shape, grains)


def state_space_size(shape: GridShape) -> int:
    return shape.degree**shape.size


def transition_table(shape: GridShape, cap: int = 2**20) -> np.ndarray:
    """Successor codes for every stable state: ``table[s, v]`` = add at ``v`` then stabilize."""
    total = state_space_size(shape)
    if total > cap:
        raise ValueError(f"state space {total} exceeds cap {cap}")
    states = np.arange(total, dtype=np.int64)
    return _kernels.successor_table(states, shape.degree, shape.neighbors, shape.degree)


def recurrent_classes(table: np.ndarray) -> np.ndarray:
    """Boolean mask of states in a terminal strongly connected component."""
    total, fan = table.shape
    rows = np.repeat(np.arange(total), fan)
    graph = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, table.ravel())), shape=(total, total))
    _, labels = connected_components(graph, directed=True, connection="strong")
    # a component is terminal when no edge leaves it
    leaves = labels[rows] != labels[table.ravel()]
    open_comp = np.zeros(labels.max() + 1, dtype=bool)
    open_comp[labels[rows[leaves]]] = True
    return ~open_comp[labels]


def tcl_exact(shape: GridShape, cap: int = 2**20) -> int:
    """Exact transience class by exhaustive search.

    Returns the largest number of grain additions, starting from the empty
    configuration, after which the state can still be transient.  A drive
    that needs ``m`` grains to become recurrent therefore shows
    ``tcl_exact >= m - 1``.
    """
    table = transition_table(shape, cap)
    recurrent = recurrent_classes(table)
    if recurrent[0]:
        return 0
    # longest path over the transient DAG, iterative post-order from state 0
    longest = np.full(table.shape[0], -1, dtype=np.int64)
    on_stack = np.zeros(table.shape[0], dtype=bool)
    stack = [(0, 0)]
    on_stack[0] = True
    while stack:
        s, k = stack[-1]
        succ = table[s]
        while k < succ.size and (recurrent[succ[k]] or longest[succ[k]] >= 0):
            k += 1
        if k < succ.size:
            t = int(succ[k])
            if on_stack[t]:
                raise RuntimeError("cycle among transient states")
            stack[-1] = (s, k + 1)
            stack.append((t, 0))
            on_stack[t] = True
            continue
        best = 0
        for t in succ:
            if not recurrent[t]:
                best = max(best, int(longest[t]) + 1)
        longest[s] = best
        on_stack[s] = False
        stack.pop()
    return int(longest[0])


# -- rendering ---------------------------------------------------------------

def write_ppm(path: Path, grid: np.ndarray) -> None:
    """Write a 2-D array of grain counts 0..3 as a plain P3 pixmap."""
    if grid.ndim != 2:
        raise ValueError("need a 2-D array")
    if grid.size and (grid.min() < 0 or grid.max() >= len(PALETTE)):
        raise ValueError("grain counts outside palette range")
    h, w = grid.shape
    lines = ["P3", f"{w} {h}", "255"]
    for row in grid:
        lines.append(" ".join("%d %d %d" % PALETTE[int(g)] for g in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_ppm(path: Path) -> np.ndarray:
    """Read a P3 pixmap back to an ``(h, w, 3)`` uint8 array."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P3":
        raise ValueError("not a P3 pixmap")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:], dtype=np.int64)
    if data.size != w * h * 3 or data.min() < 0 or data.max() > maxval:
        raise ValueError("malformed P3 body")
    return data.reshape(h, w, 3).astype(np.uint8)


def render_frames(
    shape: GridShape,
    site: Sequence[int],
    checkpoints: Sequence[int],
    out_dir: str | Path,
) -> tuple[list[Path], list[Odometer]]:
    """Drive grains onto ``site`` and write one ``frame_<grains>.ppm`` per checkpoint.

    Returns the written paths and the cumulative odometer at each checkpoint.
    """
    if shape.d != 2:
        raise ValueError("rendering needs d = 2")
    checkpoints = [int(c) for c in checkpoints]
    if any(c < 0 for c in checkpoints) or checkpoints != sorted(checkpoints):
        raise ValueError("checkpoints must be nonnegative and ascending")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    site = shape.check(site)
    config = new_config(shape)
    odo = Odometer(shape, np.zeros(shape.size, dtype=np.int64))
    placed = 0
    paths, odometers = [], []
    for c in checkpoints:
        if c > placed:
            config, step = add_and_stabilize(config, site, c - placed)
            odo = odo + step
            placed = c
        path = out_dir / f"frame_{c}.ppm"
        write_ppm(path, config.as_array())
        paths.append(path)
        odometers.append(odo)
    return paths, odometers
