"""Exact counts for simple symmetric walks on the integer line.

Counts are Python integers; a probability of a ``t``-step event is its count
over ``2**t``.  Walks start at 0 unless a start position is given.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

BRUTE_FORCE_CAP = 22


def binom(n: int, k) -> int:
    """``C(n, k)``; zero when ``k`` is not an integer in ``[0, n]``."""
    if isinstance(k, Fraction):
        if k.denominator != 1:
            return 0
        k = k.numerator
    elif isinstance(k, float):
        if not k.is_integer():
            return 0
        k = int(k)
    if k < 0 or k > n or n < 0:
        return 0
    return math.comb(n, k)


def binom_range(n: int, lo: int, hi: int) -> dict[int, int]:
    """``{k: C(n, k)}`` for integer ``k`` in ``[lo, hi]`` (zeros outside ``[0, n]``).

    One ``math.comb`` call, then the exact ratio ``C(n, k+1) = C(n, k) (n-k) / (k+1)``.
    """
    out = {k: 0 for k in range(lo, hi + 1)}
    a, b = max(lo, 0), min(hi, n)
    if a > b:
        return out
    c = math.comb(n, a)
    out[a] = c
    for k in range(a, b):
        c = c * (n - k) // (k + 1)
        out[k + 1] = c
    return out


def half(x: int) -> Fraction:
    """``x / 2`` kept exact so that odd values give a zero binomial."""
    return Fraction(x, 2)


def count_end(t: int, k: int) -> int:
    """Number of ``t``-step walks from 0 ending at ``k``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if abs(k) > t or (t + k) % 2:
        return 0
    return math.comb(t, (t + k) // 2)


def count_end_max(t: int, k: int, m: int) -> int:
    """Walks from 0 ending at ``k`` whose maximum is exactly ``m``.

    Reflection at the first visit to ``m`` maps {end = k, max >= m} onto
    {end = 2m - k}; the difference of two such counts gives max == m.
    """
    if t < 0 or m < 0:
        raise ValueError("need t >= 0 and m >= 0")
    if k > m:
        return 0
    return count_end(t, 2 * m - k) - count_end(t, 2 * m + 2 - k)


def count_end_max_formula(t: int, k: int, m: int) -> int:
    """The same count via ``C(t, (t+2m-k)/2) (4m-2k+2) / (t+2m-k+2)``."""
    if t < 0 or m < 0:
        raise ValueError("need t >= 0 and m >= 0")
    if k > m or (t + k) % 2:
        return 0
    num = binom(t, half(t + 2 * m - k)) * (4 * m - 2 * k + 2)
    den = t + 2 * m - k + 2
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"non-integral walk count at t={t}, k={k}, m={m}")
    return q


def ballot_count(t: int, i: int) -> int:
    """Walks from 1 that never drop below 1 and end at ``i`` after ``t`` steps.

    Reversing and shifting maps them onto walks from 0 ending at ``i - 1``
    with maximum ``i - 1``.
    """
    if i < 1:
        return 0
    return count_end_max(t, i - 1, i - 1)


def bounded_counts(start: int, lo: int | None, hi: int | None, t: int) -> tuple[int, np.ndarray]:
    """Walks from ``start`` that stay in ``[lo, hi]`` for ``t`` steps, by endpoint.

    Either bound may be ``None``.  Returns ``(offset, counts)`` with
    ``counts[j]`` the number of walks ending at ``offset + j``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    left = start - t if lo is None else lo
    right = start + t if hi is None else hi
    if not left <= start <= right:
        return start, np.zeros(1, dtype=object)
    vec = np.zeros(right - left + 1, dtype=object)
    vec[start - left] = 1
    for _ in range(t):
        vec = _step(vec)
    return left, vec


def _step(vec: np.ndarray) -> np.ndarray:
    new = np.zeros_like(vec)
    new[1:] += vec[:-1]
    new[:-1] += vec[1:]
    return new


def count_max_at_most(t: int, m: int) -> int:
    """Walks from 0 whose maximum over ``t`` steps is at most ``m``."""
    if m < 0:
        return 0
    return int(bounded_counts(0, None, m, t)[1].sum())


def count_end_below(t: int, k: int, m: int) -> int:
    """Walks from 0 ending at ``k`` that never exceed ``m`` (direct transfer count)."""
    if k > m or m < 0:
        return 0
    off, vec = bounded_counts(0, None, m, t)
    j = k - off
    return int(vec[j]) if 0 <= j < vec.size else 0


class _GrowingTable:
    """Per-step totals of a walk DP, extended lazily as larger ``t`` is requested."""

    def __init__(self, start: int, lo: int, hi: int | None, record: Callable[[np.ndarray], int]):
        self.lo = lo
        self.hi = hi
        size = (hi - lo + 1) if hi is not None else start - lo + 1
        self.vec = np.zeros(size, dtype=object)
        self.vec[start - lo] = 1
        self.record = record
        self.values = [record(self.vec)]

    def upto(self, t: int) -> list[int]:
        while len(self.values) <= t:
            if self.hi is None:
                self.vec = np.append(self.vec, 0)
            self.vec = _step(self.vec)
            self.values.append(self.record(self.vec))
        return self.values


_corridor_tables: dict[tuple[int, int], _GrowingTable] = {}
_stay_tables: dict[int, _GrowingTable] = {}


def corridor_counts(i: int, n: int, t_max: int) -> list[int]:
    """For each ``t <= t_max``: walks from ``i`` staying in ``[1, n]`` and at ``n`` at step ``t``."""
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    key = (i, n)
    table = _corridor_tables.get(key)
    if table is None:
        table = _corridor_tables[key] = _GrowingTable(i, 1, n, lambda v: int(v[-1]))
    return table.upto(t_max)[: t_max + 1]


def stay_counts(i: int, t_max: int) -> list[int]:
    """For each ``t <= t_max``: walks from ``i >= 1`` whose minimum stays at least 1."""
    if i < 1:
        raise ValueError("start must be >= 1")
    table = _stay_tables.get(i)
    if table is None:
        table = _stay_tables[i] = _GrowingTable(i, 1, None, lambda v: int(v.sum()))
    return table.upto(t_max)[: t_max + 1]


def corridor_count(i: int, n: int, t: int) -> int:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return corridor_counts(i, n, t)[t]


def prob_corridor(i: int, n: int, t: int) -> Fraction:
    """``Pr[w(t) = n, max = n, min >= 1]`` for a walk from ``i``.

    Earlier visits to ``n`` are allowed; the walk only has to stay inside
    ``[1, n]`` and sit at ``n`` after exactly ``t`` steps.
    """
    return Fraction(corridor_count(i, n, t), 1 << t)


def corridor_total(n: int) -> Fraction:
    """``sum_t Pr[w(t) = n, max = n, min >= 1]`` from 1, i.e. the expected visits to ``n``.

    Equals the killed-walk Green's function ``G(1, n) = 2 / (n + 1)`` on ``{1..n}``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return Fraction(2, n + 1)


def first_arrival_counts(i: int, n: int, t_max: int) -> list[int]:
    """Walks from ``i`` that stay in ``[1, n-1]`` and first reach ``n`` at step ``t``.

    This is ``corridor_count(i, n-1, t-1)``: the last step goes from ``n-1`` to ``n``.
    """
    if not 1 <= i < n:
        raise ValueError(f"need 1 <= i < n, got i={i}, n={n}")
    inner = corridor_counts(i, n - 1, max(t_max - 1, 0))
    return [0] + inner[: max(t_max, 0)]


# -- brute force ------------------------------------------------------------------

@lru_cache(maxsize=4)
def _paths(t: int) -> np.ndarray:
    codes = np.arange(1 << t, dtype=np.int64)
    steps = ((codes[:, None] >> np.arange(t)) & 1).astype(np.int16) * 2 - 1
    out = np.zeros((codes.size, t + 1), dtype=np.int16)
    np.cumsum(steps, axis=1, out=out[:, 1:])
    out.setflags(write=False)
    return out


def all_paths(t: int, start: int = 0) -> np.ndarray:
    """Every ``t``-step walk as a row of positions ``w(0), ..., w(t)``."""
    if t < 0 or t > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force needs 0 <= t <= {BRUTE_FORCE_CAP}")
    paths = _paths(t)
    return paths + np.int16(start) if start else paths


def brute_force_count(t: int, predicate: Callable[[np.ndarray], np.ndarray], start: int = 0) -> int:
    """Count walks by exhaustive enumeration.

    ``predicate`` receives the ``(2**t, t+1)`` position matrix and returns a
    boolean mask over rows.
    """
    mask = np.asarray(predicate(all_paths(t, start)), dtype=bool)
    return int(mask.sum())


def path_statistics(t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(end, max, min)`` of every ``t``-step walk from 0."""
    p = all_paths(t)
    return p[:, -1], p.max(axis=1), p.min(axis=1)


# -- series -------------------------------------------------------------------------

def _multinomial_log(parts: np.ndarray) -> np.ndarray:
    total = parts.sum(axis=-1)
    return _lgamma(total + 1) - _lgamma(parts + 1).sum(axis=-1)


_lgamma = np.vectorize(math.lgamma, otypes=[float])


def neg_binom_sum(t1: int, d: int, cap: int) -> float:
    """Partial sum of ``multinomial(t1+...+td; t1,...,td) / d**(t1+...+td)``.

    The free indices ``t2, ..., td`` range over nonnegative integers with
    ``t2 + ... + td <= cap``.  The infinite sum equals ``d``.
    """
    if t1 < 0 or d < 2 or cap < 1:
        raise ValueError("need t1 >= 0, d >= 2, cap >= 1")
    if d == 2:
        t2 = np.arange(cap + 1)
        logs = _lgamma(t1 + t2 + 1) - _lgamma(t2 + 1) - math.lgamma(t1 + 1) - (t1 + t2) * math.log(2)
        return math.fsum(np.exp(logs))
    grids = np.meshgrid(*([np.arange(cap + 1)] * (d - 1)), indexing="ij")
    free = np.stack([g.ravel() for g in grids], axis=-1)
    free = free[free.sum(axis=1) <= cap]
    parts = np.concatenate([np.full((free.shape[0], 1), t1), free], axis=1)
    logs = _multinomial_log(parts) - parts.sum(axis=1) * math.log(d)
    return math.fsum(np.exp(logs))


def corner_potential_series(n: int, u: Sequence[int], t_cap: int) -> Fraction:
    """Exact partial interleaving sum bounding ``pi_(n,n)(u)`` from below.

    Sums, over ``t1 + t2 <= t_cap``, the weight ``C(t1+t2, t1) / 2**(t1+t2)``
    times the probabilities that each coordinate walk stays in ``[1, n-1]``
    and first reaches ``n`` exactly at its last step.
    """
    u1, u2 = u
    if n < 2:
        raise ValueError("need n >= 2")
    top = -(-n // 2)
    if not (1 <= u1 <= top and 1 <= u2 <= top):
        raise ValueError(f"u must lie in the low quadrant 1..{top}, got {tuple(u)}")
    if t_cap <= 0:
        return Fraction(0)
    a = first_arrival_counts(u1, n, t_cap)
    b = first_arrival_counts(u2, n, t_cap)
    total = 0
    for s in range(t_cap + 1):
        # walks of total length s: C(s, t1) a(t1) b(s - t1) over 4**s
        acc = 0
        for t1 in range(s + 1):
            if a[t1] and b[s - t1]:
                acc += math.comb(s, t1) * a[t1] * b[s - t1]
        if acc:
            total += acc << (2 * (t_cap - s))
    return Fraction(total, 1 << (2 * t_cap))
