"""Electrical-network quantities on the sinked grid.

Every edge is a unit resistor and the sink is grounded.  ``potentials``
solves the Dirichlet problem with value 1 at a source vertex and 0 at the
sink; effective resistances, reciprocity checks and the potential lemmas are
built on top of it.  Two backends exist: ``"exact"`` (rational arithmetic) and
``"float"`` (preconditioned CG).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np
import scipy.sparse as sp

from .grid import SINK, GridShape, Vertex
from .reports import PRECISION, FitResult, LemmaReport, fit, loglog_fit
from .rng import generator
from .solvers import SolverError, pcg, solve_exact

BACKENDS = ("exact", "float")
EXACT_CAP = 4096
DENSE_CAP = 4096
FLOAT_RTOL = 1e-12

__all__ = [
    "PotentialField",
    "ReductionQuantities",
    "SolverError",
    "laplacian",
    "potentials",
    "path_potential",
    "effective_resistance",
    "green_matrix",
    "potential_matrix",
    "verify_reciprocity",
    "reduction_quantities",
    "monte_carlo_escape",
    "verify_potential_lemmas",
]


def laplacian(shape: GridShape) -> sp.csr_matrix:
    """Grid Laplacian with the sink row and column removed (integer entries)."""
    nbr = shape.neighbors
    rows = np.repeat(np.arange(shape.size), nbr.shape[1])
    cols = nbr.ravel()
    keep = cols != SINK
    off = sp.csr_matrix(
        (-np.ones(int(keep.sum()), dtype=np.int64), (rows[keep], cols[keep])),
        shape=(shape.size, shape.size),
    )
    return (off + sp.identity(shape.size, dtype=np.int64, format="csr") * shape.degree).tocsr()


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Potential ``pi_source(v)`` for every non-sink ``v``; the sink is 0."""

    shape: GridShape
    source: Vertex
    values: np.ndarray
    backend: str
    residual: float = 0.0
    iterations: int = 0

    def __getitem__(self, v: Sequence[int]):
        return self.values[self.shape.index(v)]

    def total(self):
        if self.backend == "exact":
            return sum(self.values, Fraction(0))
        return float(self.values.sum())

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.shape.dims)

    def harmonic_residual(self):
        """Largest ``|deg*pi(v) - sum of neighbours|`` over ``v`` other than the source."""
        shape = self.shape
        src = shape.index(self.source)
        nbr = shape.neighbors
        if self.backend == "exact":
            worst = Fraction(0)
            for v in range(shape.size):
                if v == src:
                    continue
                acc = shape.degree * self.values[v]
                for w in nbr[v]:
                    if w != SINK:
                        acc -= self.values[w]
                worst = max(worst, abs(acc))
            return worst
        vals = np.append(self.values, 0.0)
        lap = shape.degree * self.values - vals[nbr].sum(axis=1)
        lap[src] = 0.0
        return float(np.abs(lap).max())

    def current(self):
        """Total current leaving the source."""
        src = self.shape.index(self.source)
        out = self.shape.degree * self.values[src]
        for w in self.shape.neighbors[src]:
            if w != SINK:
                out -= self.values[w]
        return out


def _check_backend(backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    return backend


def potentials(
    shape: GridShape,
    source: Sequence[int],
    backend: str = "float",
    rtol: float = FLOAT_RTOL,
    maxiter: int | None = None,
) -> PotentialField:
    _check_backend(backend)
    source = shape.check(source)
    src = shape.index(source)
    L = laplacian(shape)
    keep = np.delete(np.arange(shape.size), src)
    A = L[keep][:, keep]
    b = -L[keep, src].toarray().ravel()
    if backend == "exact":
        if shape.size > EXACT_CAP:
            raise ValueError(f"exact backend limited to {EXACT_CAP} vertices, grid has {shape.size}")
        sol = [row[0] for row in solve_exact(A, b.reshape(-1, 1))] if keep.size else []
        values = np.empty(shape.size, dtype=object)
        values[keep] = sol
        values[src] = Fraction(1)
        return PotentialField(shape, source, values, backend)
    if maxiter is None:
        maxiter = 50 * shape.size
    values = np.empty(shape.size, dtype=np.float64)
    values[src] = 1.0
    if keep.size:
        x, iters, rel = pcg(A, b, rtol=rtol, maxiter=maxiter)
        values[keep] = x
    else:
        iters, rel = 0, 0.0
    return PotentialField(shape, source, values, backend, residual=rel, iterations=iters)


def path_potential(n: int, u1: int, v1: int) -> Fraction:
    """Potential at ``u1`` on the path ``1..n`` (sink at both ends) with source ``v1``."""
    if not (1 <= u1 <= n and 1 <= v1 <= n):
        raise ValueError(f"need 1 <= u1, v1 <= n, got n={n}, u1={u1}, v1={v1}")
    if v1 <= u1:
        return Fraction(n + 1 - u1, n + 1 - v1)
    return Fraction(u1, v1)


def effective_resistance(shape: GridShape, u: Sequence[int], backend: str = "float"):
    """``R_eff(sink, u)``: reciprocal of the current out of ``u`` at unit potential."""
    field = potentials(shape, u, backend)
    current = field.current()
    if backend == "exact":
        return 1 / Fraction(current)
    return 1.0 / float(current)


def grid_pair_resistance(n: int, u: Sequence[int], v: Sequence[int]) -> float:
    """``R_eff(u, v)`` in the plain ``n x n`` resistor grid (no sink)."""
    shape = GridShape(n, 2)
    u, v = shape.check(u), shape.check(v)
    if u == v:
        return 0.0
    L = laplacian(shape).astype(np.float64).tolil()
    # drop the sink edges: boundary vertices lose degree
    for i, extra in enumerate(shape.sink_edges):
        L[i, i] -= extra
    keep = np.delete(np.arange(shape.size), shape.index(v))
    A = sp.csr_matrix(L)[keep][:, keep]
    b = np.zeros(keep.size)
    ui = int(np.searchsorted(keep, shape.index(u)))
    b[ui] = 1.0
    x, _, _ = pcg(A, b, rtol=FLOAT_RTOL, maxiter=50 * shape.size)
    return float(x[ui])


# -- all-sources quantities ---------------------------------------------------

def green_matrix(shape: GridShape) -> np.ndarray:
    """Dense inverse of the reduced Laplacian; ``G[u, u] = R_eff(sink, u)``."""
    if shape.size > DENSE_CAP:
        raise ValueError(f"dense Green matrix limited to {DENSE_CAP} vertices")
    return np.linalg.inv(laplacian(shape).toarray().astype(np.float64))


def potential_matrix(shape: GridShape, G: np.ndarray | None = None) -> np.ndarray:
    """``P[u, v] = pi_u(v)`` from the Green matrix (``pi_u(v) = G[v, u] / G[u, u]``)."""
    if G is None:
        G = green_matrix(shape)
    return G / np.diag(G)[:, None]


def exact_potential_rows(shape: GridShape, sources: Iterable[Sequence[int]]) -> dict[Vertex, list[Fraction]]:
    """Exact ``pi_u`` for several sources from one elimination of the Laplacian."""
    if shape.size > EXACT_CAP:
        raise ValueError(f"exact backend limited to {EXACT_CAP} vertices, grid has {shape.size}")
    sources = [shape.check(u) for u in sources]
    idx = [shape.index(u) for u in sources]
    B = np.zeros((shape.size, len(idx)), dtype=np.int64)
    for t, i in enumerate(idx):
        B[i, t] = 1
    X = solve_exact(laplacian(shape), B)
    out = {}
    for t, (u, i) in enumerate(zip(sources, idx)):
        diag = X[i][t]
        out[u] = [X[v][t] / diag for v in range(shape.size)]
    return out


def verify_reciprocity(
    shape: GridShape,
    pairs: Iterable[tuple[Sequence[int], Sequence[int]]],
    backend: str = "exact",
    rel_tol: float = 1e-9,
) -> list[LemmaReport]:
    """Check ``R(sink,u) pi_u(v) == R(sink,v) pi_v(u)`` pair by pair."""
    _check_backend(backend)
    pairs = [(shape.check(u), shape.check(v)) for u, v in pairs]
    fields = {}
    for u, v in pairs:
        for w in (u, v):
            if w not in fields:
                fields[w] = potentials(shape, w, backend)
    reports = []
    for u, v in pairs:
        fu, fv = fields[u], fields[v]
        params = {"n": shape.n, "d": shape.d, "u": list(u), "v": list(v), "backend": backend}
        if backend == "exact":
            lhs = fu[v] / Fraction(fu.current())
            rhs = fv[u] / Fraction(fv.current())
            reports.append(LemmaReport("potReciprocity", params, lhs, rhs, "=="))
        else:
            lhs = float(fu[v]) / float(fu.current())
            rhs = float(fv[u]) / float(fv.current())
            params["lhs_value"], params["rhs_value"] = lhs, rhs
            rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
            reports.append(LemmaReport("potReciprocity", params, rel, rel_tol, "<="))
    return reports


@dataclass
class ReductionQuantities:
    shape: GridShape
    upper_q: float
    lower_q: float
    upper_arg: tuple[Vertex, Vertex]
    lower_arg: tuple[Vertex, Vertex]
    max_sum: float


def reduction_quantities(shape: GridShape, cap: int = 1024) -> ReductionQuantities:
    """The two maxima over ordered vertex pairs that bracket the transience class.

    ``upper_q = max (sum_x pi_u(x)) / pi_u(v)`` and ``lower_q = max 1 / pi_u(v)``.
    """
    if shape.size > cap:
        raise ValueError(f"all-sources solve limited to {cap} vertices (grid has {shape.size})")
    P = potential_matrix(shape)
    sums = P.sum(axis=1)
    inv = 1.0 / P
    lower_flat = int(np.argmax(inv))
    upper = sums[:, None] * inv
    upper_flat = int(np.argmax(upper))
    pair = lambda flat: tuple(shape.vertex(i) for i in divmod(flat, shape.size))
    return ReductionQuantities(
        shape=shape,
        upper_q=float(upper.flat[upper_flat]),
        lower_q=float(inv.flat[lower_flat]),
        upper_arg=pair(upper_flat),
        lower_arg=pair(lower_flat),
        max_sum=float(sums.max()),
    )


def monte_carlo_escape(
    shape: GridShape,
    start: Sequence[int],
    target: Sequence[int],
    trials: int,
    seed: int,
    stream: int = 0,
    block_size: int = 1 << 16,
) -> tuple[float, float]:
    """Estimate ``pi_target(start)`` by simple random walks; returns ``(mean, stderr)``.

    Trials are simulated in blocks; block ``b`` always draws from
    ``generator(seed, stream, b)``, so results do not depend on scheduling.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start = np.array(shape.check(start), dtype=np.int64)
    target = np.array(shape.check(target), dtype=np.int64)
    if np.array_equal(start, target):
        return 1.0, 0.0
    hits = 0
    for block, first in enumerate(range(0, trials, block_size)):
        count = min(block_size, trials - first)
        hits += _escape_block(shape, start, target, count, generator(seed, stream, block))
    p = hits / trials
    stderr = math.sqrt(p * (1 - p) / trials) if trials > 1 else 0.0
    return p, stderr


def _escape_block(shape, start, target, count, rng) -> int:
    d, n = shape.d, shape.n
    pos = np.tile(start, (count, 1))
    hits = 0
    while pos.shape[0]:
        move = rng.integers(0, 2 * d, size=pos.shape[0])
        axis = move // 2
        step = np.where(move % 2 == 0, -1, 1)
        pos[np.arange(pos.shape[0]), axis] += step
        escaped = ((pos < 1) | (pos > n)).any(axis=1)
        arrived = (pos == target).all(axis=1)
        hits += int(arrived.sum())
        pos = pos[~(escaped | arrived)]
    return hits


# -- potential lemmas -----------------------------------------------------------

def _log_bases(n: int, coef: float, const: float) -> dict:
    return {"log_base": "e", "bound_base_e": coef * math.log(n) + const, "bound_base_2": coef * math.log2(n) + const}


def check_nn_is_min(shape: GridShape, P: np.ndarray | None = None) -> list[LemmaReport]:
    """Every ``pi_u(v)`` with ``u`` in the low orthant is at least ``(1/2d)^d pi_u(far corner)``.

    For ``d = 2`` the factor is 1/16.
    """
    if P is None:
        P = potential_matrix(shape)
    factor = Fraction(1, 2 * shape.d) ** shape.d
    lemma = "nnIsMin" if shape.d == 2 else "cornerIsMinForHigherDimension"
    far = shape.index(shape.far_corner())
    reports = []
    for u in shape.quadrant():
        row = P[shape.index(u)]
        arg = int(np.argmin(row))
        params = {"n": shape.n, "d": shape.d, "u": list(u), "argmin_v": list(shape.vertex(arg)), "factor": factor}
        reports.append(LemmaReport(lemma, params, float(row[arg]), float(factor) * float(row[far]), ">="))
    return reports


def check_swap_source_target(shape: GridShape, P: np.ndarray | None = None, pairs=None) -> LemmaReport:
    """``pi_u(v) <= (8 log n + 4) pi_v(u)``, reported as the worst ratio over the pairs."""
    if P is None:
        P = potential_matrix(shape)
    ratio = P / P.T
    if pairs is not None:
        idx = np.array([[shape.index(u), shape.index(v)] for u, v in pairs])
        vals = ratio[idx[:, 0], idx[:, 1]]
        k = int(np.argmax(vals))
        worst, arg = float(vals[k]), (idx[k, 0], idx[k, 1])
        sampled = len(idx)
    else:
        flat = int(np.argmax(ratio))
        worst, arg = float(ratio.flat[flat]), divmod(flat, shape.size)
        sampled = "all"
    bound = 8 * math.log(shape.n) + 4
    params = {
        "n": shape.n,
        "d": shape.d,
        "pairs": sampled,
        "argmax_u": list(shape.vertex(arg[0])),
        "argmax_v": list(shape.vertex(arg[1])),
        **_log_bases(shape.n, 8, 4),
    }
    lemma = "swapSourceTarget" if shape.d == 2 else "swapSourceTargetHigher"
    return LemmaReport(lemma, params, worst, bound, "<=")


def check_bounded_resistance(shape: GridShape, G: np.ndarray | None = None) -> list[LemmaReport]:
    """``1/4 <= R_eff(sink, u) <= 2 log n + 1`` for every ``u`` (two reports: min and max)."""
    if G is None:
        G = green_matrix(shape)
    R = np.diag(G)
    lo, hi = int(np.argmin(R)), int(np.argmax(R))
    base = {"n": shape.n, "d": shape.d}
    upper = 2 * math.log(shape.n) + 1
    return [
        LemmaReport("boundedERGrid", {**base, "side": "lower", "u": list(shape.vertex(lo))}, float(R[lo]), 0.25, ">="),
        LemmaReport(
            "boundedERGrid",
            {**base, "side": "upper", "u": list(shape.vertex(hi)), **_log_bases(shape.n, 2, 1)},
            float(R[hi]),
            upper,
            "<=",
        ),
    ]


def check_corner_to_corner(n: int) -> list[LemmaReport]:
    """``log(n-1)/2 <= R_eff((1,1), (n,n)) <= 2 log n`` on the plain grid."""
    r = grid_pair_resistance(n, (1, 1), (n, n))
    params = {"n": n, "log_base": "e"}
    return [
        LemmaReport("cornerToCornerER", {**params, "side": "lower"}, r, math.log(n - 1) / 2 if n > 1 else 0.0, ">="),
        LemmaReport(
            "cornerToCornerER",
            {**params, "side": "upper", "bound_base_e": 2 * math.log(n), "bound_base_2": 2 * math.log2(n)},
            r,
            2 * math.log(n),
            "<=",
        ),
    ]


def corner_field(shape: GridShape, backend: str = "float") -> PotentialField:
    """Potential field sourced at the far corner ``(n, ..., n)``."""
    return potentials(shape, shape.far_corner(), backend)


def check_voltage_lower(shape: GridShape, field: PotentialField | None = None) -> LemmaReport:
    """``pi_(n,..,n)(u) * n^(3d-2) / prod(u) >= e^-100`` minimised over the low orthant."""
    if field is None:
        field = corner_field(shape)
    n, d = shape.n, shape.d
    best, arg = None, None
    for u in shape.quadrant():
        val = mpmath.mpf(float(field[u])) * n ** (3 * d - 2) / math.prod(u)
        if best is None or val < best:
            best, arg = val, u
    params = {"n": n, "d": d, "argmin_u": list(arg), "hypothesis_n_ge_10": n >= 10}
    lemma = "voltageLower" if d == 2 else "voltageLowerHigher"
    with mpmath.workdps(PRECISION):
        return LemmaReport(lemma, params, best, mpmath.exp(-100), ">=")


def check_corner_upper(shape: GridShape, field: PotentialField | None = None) -> LemmaReport:
    """``pi_(n,n)((1,1)) <= e^100 / n^4``."""
    if field is None:
        field = corner_field(shape)
    n = shape.n
    with mpmath.workdps(PRECISION):
        rhs = mpmath.exp(100) / mpmath.mpf(n) ** 4
        params = {"n": n, "d": shape.d, "hypothesis_n_ge_20": n >= 20}
        return LemmaReport("cornerUpperBound", params, mpmath.mpf(float(field[shape.corner()])), rhs, "<=")


def check_decoupling(shape: GridShape, exact: bool = True) -> LemmaReport:
    """``pi_v(u) <= prod_i pi^path_{v_i}(u_i)`` over all ordered pairs; reports the worst ratio."""
    n = shape.n
    path = [[path_potential(n, a, b) for b in range(1, n + 1)] for a in range(1, n + 1)]
    verts = list(shape.vertices())
    worst, arg = None, None
    if exact:
        rows = exact_potential_rows(shape, verts)
        for v in verts:
            row = rows[v]
            for ui, u in enumerate(verts):
                bound = math.prod((path[a - 1][b - 1] for a, b in zip(u, v)), start=Fraction(1))
                r = row[ui] / bound
                if worst is None or r > worst:
                    worst, arg = r, (u, v)
    else:
        P = potential_matrix(shape)
        pathf = np.array(path, dtype=float)
        coords = np.array(verts) - 1
        # bound[v, u] = prod_i path[u_i, v_i]
        bound = np.ones((shape.size, shape.size))
        for i in range(shape.d):
            bound *= pathf[coords[None, :, i], coords[:, None, i]]
        ratio = P / bound
        flat = int(np.argmax(ratio))
        vi, ui = divmod(flat, shape.size)
        worst, arg = float(ratio.flat[flat]), (verts[ui], verts[vi])
    params = {"n": n, "d": shape.d, "exact": exact, "argmax_u": list(arg[0]), "argmax_v": list(arg[1])}
    return LemmaReport("decoupling", params, worst, Fraction(1) if exact else 1.0, "<=")


def sum_bound_ratio(shape: GridShape, u: Sequence[int] | None = None) -> float:
    """``(sum_v pi_u(v)) / prod(u)``, the quantity bounded by ``O(log^(d+1) n)``-type lemmas."""
    u = shape.check(u if u is not None else shape.corner())
    return potentials(shape, u).total() / math.prod(u)


def sum_bound_growth(ns: Sequence[int], d: int = 2) -> LemmaReport:
    """Fit ``log(ratio)`` against ``log log n`` and compare the exponent to the polylog power.

    The power is 3 for ``d = 2``; for general ``d`` the bound
    ``log n * prod(u_i log n)`` gives ``d + 1``.  Only the fitted exponent is
    compared, since the statement hides its constant.
    """
    ratios = [sum_bound_ratio(GridShape(n, d)) for n in ns]
    power = d + 1
    slope, _, r2 = loglog_fit([math.log(n) for n in ns], ratios)
    params = {"ns": list(ns), "d": d, "ratios": ratios, "fit": "log(ratio) vs log(log n)", "r2": r2}
    lemma = "sumBound" if d == 2 else "sumBoundHigher"
    return LemmaReport(lemma, params, slope, float(power), "<=")


def corner_potential_scaling(ns: Sequence[int], d: int = 2, tolerance: float | None = None) -> FitResult:
    """Exponent of ``pi_(n,..,n)((1,..,1))`` in ``n``; the expected value is ``-(3d - 2)``."""
    vals = [float(corner_field(GridShape(n, d))[(1,) * d]) for n in ns]
    if tolerance is None:
        tolerance = 0.3 if d == 2 else 0.6
    return fit(f"corner_potential_d{d}", list(ns), vals, -(3 * d - 2), tolerance)


def verify_potential_lemmas(shape: GridShape, exact_decoupling: bool | None = None) -> list[LemmaReport]:
    """All literal-constant potential inequalities that apply at this grid size."""
    G = green_matrix(shape)
    P = potential_matrix(shape, G)
    reports = []
    reports += check_bounded_resistance(shape, G)
    reports += check_nn_is_min(shape, P)
    reports.append(check_swap_source_target(shape, P))
    if exact_decoupling is None:
        exact_decoupling = shape.size <= 64
    reports.append(check_decoupling(shape, exact=exact_decoupling))
    field = corner_field(shape)
    if shape.n >= 10:
        reports.append(check_voltage_lower(shape, field))
    if shape.d == 2:
        reports.append(check_corner_upper(shape, field))
    return reports
