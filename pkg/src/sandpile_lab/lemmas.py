"""Evaluate the one-dimensional walk inequalities at concrete parameters.

Each check takes a parameter dict, enforces the statement's hypotheses and
returns a :class:`LemmaReport`.  Walk probabilities on the left-hand side are
exact rationals; transcendental constants are evaluated with mpmath.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator

import mpmath

from .reports import PRECISION, LemmaReport
from .walks import (
    binom,
    binom_range,
    corridor_counts,
    corridor_total,
    count_end,
    count_end_below,
    count_end_max,
    count_max_at_most,
    half,
    neg_binom_sum,
    stay_counts,
)


class HypothesisError(ValueError):
    """A parameter point lies outside the statement's hypotheses."""

    def __init__(self, lemma_id: str, hypothesis: str, params: dict):
        super().__init__(f"{lemma_id}: hypothesis violated: {hypothesis} (params {params})")
        self.lemma_id = lemma_id
        self.hypothesis = hypothesis
        self.params = params


def _require(cond: bool, lemma_id: str, hypothesis: str, params: dict):
    if not cond:
        raise HypothesisError(lemma_id, hypothesis, params)


def _e(x) -> mpmath.mpf:
    return mpmath.exp(mpmath.mpf(x))


def _ceil_half(n: int) -> int:
    return -(-n // 2)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _p(count: int, t: int) -> Fraction:
    return Fraction(count, 1 << t)


def _corridor(i: int, n: int, t: int) -> Fraction:
    return _p(corridor_counts(i, n, t)[t], t)


def _end_max_from(i: int, n: int, t: int) -> Fraction:
    """``Pr_i[w(t) = n, max = n]``: shift the start to 0."""
    return _p(count_end_max(t, n - i, n - i), t)


def _stay(i: int, t: int) -> Fraction:
    return _p(stay_counts(i, t)[t], t)


@lru_cache(maxsize=32)
def _halves(n: int, t: int) -> tuple[int, int, dict[int, int], dict[int, int]]:
    """Half lengths and the binomial rows they need for midpoints ``1..n``."""
    a, b = t // 2, t - t // 2
    row_a = binom_range(a, a // 2, (a + n + 1) // 2 + 1)
    row_b = binom_range(b, b // 2, (b + n + 1) // 2 + 1)
    return a, b, row_a, row_b


def _half_binom(row: dict[int, int], x: int) -> int:
    return row.get(x // 2, 0) if x % 2 == 0 else 0


def _summand_numerators(n: int, t: int) -> list[int]:
    """Numerators over ``t**2 * 2**t`` of the midpoint-split product bound, ``i = 1..n``."""
    a, b, ra, rb = _halves(n, t)
    return [
        16 * i * (n - i + 1) * _half_binom(ra, a + i - 1) * _half_binom(rb, b + (n - i + 1) - 1)
        for i in range(1, n + 1)
    ]


def _summand_numerator(n: int, i: int, t: int) -> int:
    a, b, ra, rb = _halves(n, t)
    return 16 * i * (n - i + 1) * _half_binom(ra, a + i - 1) * _half_binom(rb, b + (n - i + 1) - 1)


def _summand(n: int, i: int, t: int) -> Fraction:
    """Product expression bounding each midpoint term of the split corridor walk."""
    return Fraction(_summand_numerator(n, i, t), t * t << t)


def _doubled(n: int, i: int, t: int) -> Fraction:
    """The same expression written for walk length ``2t`` (half-length ``t``)."""
    c1 = binom(t, half(t + i - 1))
    c2 = binom(t, half(t + (n - i + 1) - 1))
    return Fraction(16 * i * (n - i + 1) * c1 * c2, (2 * t) ** 2 * (1 << (2 * t)))


# -- checks -------------------------------------------------------------------------

def check_num_walks(p: dict) -> LemmaReport:
    t, n = p["t"], p["n"]
    _require(t >= 0 and n >= 0, "numWalks", "t, n >= 0", p)
    lhs = count_max_at_most(t, n) - count_max_at_most(t, n - 1)
    rhs = count_end(t, n) if (t + n) % 2 == 0 else count_end(t, n + 1)
    return LemmaReport("numWalks", p, _p(lhs, t), _p(rhs, t), "==")


def check_goes_above(p: dict) -> LemmaReport:
    t, n, k = p["t"], p["n"], p["k"]
    _require(t >= 0 and n >= 0, "goesAbove", "t, n >= 0", p)
    _require(k <= n, "goesAbove", "k <= n", p)
    lhs = count_end(t, k) - count_end_below(t, k, n - 1)
    return LemmaReport("goesAbove", p, _p(lhs, t), _p(count_end(t, 2 * n - k), t), "==")


def check_endn(p: dict) -> LemmaReport:
    t, n, k = p["t"], p["n"], p["k"]
    _require(t >= 0 and n >= 0, "endn", "t, n >= 0", p)
    _require(k <= n, "endn", "k <= n", p)
    lhs = count_end_below(t, k, n) - count_end_below(t, k, n - 1)
    if (t + k) % 2:
        rhs = Fraction(0)
    else:
        rhs = _p(binom(t, half(t + 2 * n - k)), t) * Fraction(4 * n - 2 * k + 2, t + 2 * n - k + 2)
    return LemmaReport("endn", p, _p(lhs, t), rhs, "==")


def check_stirling(p: dict) -> list[LemmaReport]:
    n = p["n"]
    _require(_is_int(n) and n >= 1, "stirling", "n positive integer", p)
    with mpmath.workdps(PRECISION):
        nn = mpmath.mpf(n)
        ratio = mpmath.exp(mpmath.loggamma(nn + 1) - nn * mpmath.log(nn) + nn) / mpmath.sqrt(nn)
        return [
            LemmaReport("stirling", {**p, "side": "lower"}, ratio, mpmath.sqrt(2 * mpmath.pi), ">="),
            LemmaReport("stirling", {**p, "side": "upper"}, ratio, mpmath.e, "<="),
        ]


def check_bin_bound(p: dict) -> LemmaReport:
    n, c = p["n"], p["c"]
    _require(_is_int(n) and n >= 1, "binBound", "n positive integer", p)
    _require(c > 0, "binBound", "c > 0", p)
    with mpmath.workdps(PRECISION):
        root = mpmath.sqrt(n)
        c = mpmath.mpf(c)
        _require(c * root < n, "binBound", "c*sqrt(n) < n", p)
        lo = int(mpmath.ceil((n - c * root) / 2))
        hi = int(mpmath.floor((n + c * root) / 2))
        _require(lo <= hi, "binBound", "interval [(n - c sqrt n)/2, (n + c sqrt n)/2] contains an integer", p)
        # the binomial is unimodal, so the minimum over the interval sits at an end;
        # every k is still evaluated
        worst_k = min(range(lo, hi + 1), key=lambda k: math.comb(n, k))
        lhs = mpmath.mpf(math.comb(n, worst_k))
        rhs = mpmath.exp(-1 - c * c) * mpmath.mpf(2) ** n / root
        return LemmaReport("binBound", {**p, "k_min": lo, "k_max": hi, "argmin_k": worst_k}, lhs, rhs, ">=")


def _window(lemma: str, p: dict, need_parity: bool, need_t_ge_n: bool = False):
    n, i, c, t = p["n"], p["i"], p["c"], p["t"]
    _require(n >= 1, lemma, "n >= 1", p)
    _require(1 <= i <= _ceil_half(n), lemma, "1 <= i <= ceil(n/2)", p)
    _require(c > 4, lemma, "c > 4", p)
    _require(Fraction(n * n) / Fraction(c) <= t, lemma, "n^2/c <= t", p)
    _require(4 * t <= n * n, lemma, "t <= n^2/4", p)
    if need_t_ge_n:
        _require(t >= n, lemma, "t >= n", p)
    if need_parity:
        _require((t - (n - i)) % 2 == 0, lemma, "t = n - i (mod 2)", p)


def check_prob_left(p: dict) -> LemmaReport:
    _window("probLeft", p, need_parity=False)
    n, i, c, t = p["n"], p["i"], p["c"], p["t"]
    with mpmath.workdps(PRECISION):
        return LemmaReport("probLeft", p, _stay(i, t), _e(-1 - c) * i / n, ">=")


def check_prob_right(p: dict) -> LemmaReport:
    n, i, c, t = p["n"], p["i"], p["c"], p["t"]
    _require(n >= 1, "probRight", "n >= 1", p)
    _require(1 <= i <= _ceil_half(n), "probRight", "1 <= i <= ceil(n/2)", p)
    _require(c > 0, "probRight", "c > 0", p)
    _require(t >= n and Fraction(n * n) / Fraction(c) <= t, "probRight", "max{n, n^2/c} <= t", p)
    _require(4 * t <= n * n, "probRight", "t <= n^2/4", p)
    _require((t - (n - i)) % 2 == 0, "probRight", "t = n - i (mod 2)", p)
    with mpmath.workdps(PRECISION):
        return LemmaReport("probRight", p, _end_max_from(i, n, t), _e(-1 - c) / n**2, ">=")


def check_left_worse(p: dict) -> LemmaReport:
    n, i, t = p["n"], p["i"], p["t"]
    _require(n >= 1, "leftWorse", "n >= 1", p)
    _require(1 <= i <= _ceil_half(n), "leftWorse", "1 <= i <= ceil(n/2)", p)
    _require(0 <= t and 4 * t <= n * n, "leftWorse", "0 <= t <= n^2/4", p)
    _require((t - (n - i)) % 2 == 0, "leftWorse", "t = n - i (mod 2)", p)
    joint = _end_max_from(i, n, t)
    # {end = n, max = n} splits by whether the minimum stays >= 1
    below = joint - _corridor(i, n, t)
    p_below = 1 - _stay(i, t)
    if p_below == 0:
        # the walk cannot reach 0 in t < i steps: the conditional event is empty
        return LemmaReport("leftWorse", {**p, "conditioning_null": True}, joint, Fraction(0), ">=")
    return LemmaReport("leftWorse", {**p, "conditioning_null": False}, joint, below / p_below, ">=")


def check_prob_left_right(p: dict) -> LemmaReport:
    _window("probLeftRight", p, need_parity=True)
    n, i, c, t = p["n"], p["i"], p["c"], p["t"]
    with mpmath.workdps(PRECISION):
        return LemmaReport("probLeftRight", p, _corridor(i, n, t), _e(-2 - 2 * c) * i / n**3, ">=")


def check_upper_prob_left_right(p: dict) -> LemmaReport:
    n, t = p["n"], p["t"]
    _require(n >= 20, "upperProbLeftRight", "n >= 20", p)
    _require(t >= n - 1, "upperProbLeftRight", "t >= n - 1", p)
    with mpmath.workdps(PRECISION):
        a = _e(25) / mpmath.mpf(n) ** 3
        b = 64 * (mpmath.mpf(n) / t) ** 3
        return LemmaReport("upperProbLeftRight", p, _corridor(1, n, t), min(a, b), "<=")


def check_chernoff(p: dict) -> LemmaReport:
    n = p["n"]
    _require(n >= 10, "chernoff", "n >= 10", p)
    lo, hi = -(-n // 4), (3 * n) // 4
    odd = sum(math.comb(n, k) for k in range(lo, hi + 1) if k % 2)
    even = sum(math.comb(n, k) for k in range(lo, hi + 1) if k % 2 == 0)
    return LemmaReport("chernoff", p, Fraction(min(odd, even), 1 << n), Fraction(2, 5), ">=")


def check_bin_sum_inf(p: dict) -> LemmaReport:
    t1, cap = p["t1"], p["cap"]
    d = p.get("d", 2)
    lemma = "binSumInf" if d == 2 else "binSumInfHigher"
    _require(t1 >= 0, lemma, "t1 >= 0", p)
    _require(d >= 2, lemma, "d >= 2", p)
    tol = p.get("tol", 1e-9 if d == 2 else 1e-6)
    partial = neg_binom_sum(t1, d, cap)
    return LemmaReport(lemma, {**p, "partial_sum": partial, "limit": d}, abs(partial - d), tol, "<=")


def check_divide_walk_in_half(p: dict) -> LemmaReport:
    n, t = p["n"], p["t"]
    _require(1 <= n <= t, "divideWalkinHalf", "1 <= n <= t", p)
    a, b, ra, rb = _halves(n, t)
    num = 0
    for i in range(1, n + 1):
        # first half: from 1, min >= 1, end at i; second half: from i, end = max = n.
        # Both are reflection differences; the halves share the denominator 2**t.
        first = _half_binom(ra, a + i - 1) - _half_binom(ra, a + i + 1)
        second = _half_binom(rb, b + n - i) - _half_binom(rb, b + n - i + 2)
        num += first * second
    rhs = _p(num, t)
    return LemmaReport("divideWalkinHalf", p, _corridor(1, n, t), rhs, "<=")


def check_sum_bound_for_max_min_end(p: dict) -> LemmaReport:
    n, t = p["n"], p["t"]
    _require(1 <= n <= t, "sumBoundForMaxMinEnd", "1 <= n <= t", p)
    rhs = Fraction(sum(_summand_numerators(n, t)), t * t << t)
    return LemmaReport("sumBoundForMaxMinEnd", p, _corridor(1, n, t), rhs, "<=")


def check_simple_max(p: dict) -> LemmaReport:
    n, i, t = p["n"], p["i"], p["t"]
    # the printed hypothesis "1 <= i n" is read as 1 <= i <= n
    _require(1 <= i <= n, "simpleMaxforProductProb", "1 <= i <= n", p)
    _require(t >= 1, "simpleMaxforProductProb", "t >= 1", p)
    params = {**p, "hypothesis_reading": "1 <= i <= n"}
    return LemmaReport("simpleMaxforProductProb", params, _summand(n, i, t), Fraction(64 * n * n, t**3), "<=")


def check_max_above_n_squared(p: dict) -> LemmaReport:
    n, i, t = p["n"], p["i"], p["t"]
    _require(n >= 20, "MaxIsAbovenSquared", "n >= 20", p)
    _require(1 <= i <= n, "MaxIsAbovenSquared", "1 <= i <= n", p)
    _require(1 <= t and 40 * t <= n * n, "MaxIsAbovenSquared", "1 <= t <= n^2/40", p)
    return LemmaReport("MaxIsAbovenSquared", p, _doubled(n, i, t), _doubled(n, i, t + 2), "<=")


def corridor_peak(n: int, t_max: int | None = None) -> tuple[Fraction, int]:
    """Largest ``Pr_1[w(t) = n, max = n, min >= 1]`` over ``t <= t_max`` and its argmax."""
    if t_max is None:
        t_max = 4 * n * n
    counts = corridor_counts(1, n, t_max)
    best, arg = Fraction(0), 0
    for t, c in enumerate(counts):
        if c:
            v = _p(c, t)
            if v > best:
                best, arg = v, t
    return best, arg


def check_upper_bound_max_sum(p: dict, corner_potential: float | None = None) -> LemmaReport:
    """Needs ``pi_(n,n)((1,1))``; computed with the float solver unless supplied."""
    n = p["n"]
    _require(n >= 20, "upperBoundMaxSum", "n >= 20", p)
    t_max = p.get("t_max", 4 * n * n)
    peak, arg = corridor_peak(n, t_max)
    if corner_potential is None:
        from .electro import corner_field
        from .grid import GridShape

        corner_potential = float(corner_field(GridShape(n, 2))[(1, 1)])
    rhs = 2 * peak * corridor_total(n)
    params = {**p, "t_max": t_max, "argmax_t": arg, "corridor_sum": corridor_total(n)}
    return LemmaReport("upperBoundMaxSum", params, corner_potential, float(rhs), "<=")


def check_upper_bound_sum(p: dict) -> LemmaReport:
    n = p["n"]
    _require(n >= 20, "upperBoundSum", "n >= 20", p)
    t_max = p.get("t_max", 4 * n * n)
    partial = sum(_p(c, t) for t, c in enumerate(corridor_counts(1, n, t_max)))
    total = corridor_total(n)
    params = {**p, "t_max": t_max, "dp_partial_sum": float(partial), "partial_below_total": partial <= total}
    with mpmath.workdps(PRECISION):
        return LemmaReport("upperBoundSum", params, total, _e(26) / n, "<=")


CHECKS: dict[str, Callable[[dict], LemmaReport | list[LemmaReport]]] = {
    "numWalks": check_num_walks,
    "goesAbove": check_goes_above,
    "endn": check_endn,
    "stirling": check_stirling,
    "binBound": check_bin_bound,
    "probLeft": check_prob_left,
    "probRight": check_prob_right,
    "leftWorse": check_left_worse,
    "probLeftRight": check_prob_left_right,
    "upperProbLeftRight": check_upper_prob_left_right,
    "chernoff": check_chernoff,
    "binSumInf": check_bin_sum_inf,
    "binSumInfHigher": check_bin_sum_inf,
    "divideWalkinHalf": check_divide_walk_in_half,
    "sumBoundForMaxMinEnd": check_sum_bound_for_max_min_end,
    "simpleMaxforProductProb": check_simple_max,
    "MaxIsAbovenSquared": check_max_above_n_squared,
    "upperBoundMaxSum": check_upper_bound_max_sum,
    "upperBoundSum": check_upper_bound_sum,
}

LEMMA_IDS = tuple(CHECKS)


def verify_walk_lemma(lemma_id: str, param_grid: Iterable[dict]) -> list[LemmaReport]:
    """Evaluate ``lemma_id`` at every point of ``param_grid``, in grid order.

    Raises :class:`HypothesisError` at the first point outside the hypotheses.
    """
    if lemma_id not in CHECKS:
        raise KeyError(f"unknown lemma id {lemma_id!r}; known: {', '.join(LEMMA_IDS)}")
    check = CHECKS[lemma_id]
    out: list[LemmaReport] = []
    for params in param_grid:
        res = check(dict(params))
        out.extend(res if isinstance(res, list) else [res])
    return out


# -- standard parameter grids --------------------------------------------------------

def _window_ts(n: int, c: int, i: int, parity: bool, t_ge_n: bool = False) -> Iterator[int]:
    lo = max(-(-n * n // c), n if t_ge_n else 0)
    for t in range(lo, n * n // 4 + 1):
        if not parity or (t - (n - i)) % 2 == 0:
            yield t


def default_grid(lemma_id: str, ns: Iterable[int] | None = None) -> list[dict]:
    """Parameter points used by the verification suite for ``lemma_id``."""
    ns = list(ns) if ns is not None else None
    cs = (5, 10, 20)
    if lemma_id in ("numWalks",):
        return [{"t": t, "n": n} for t in range(17) for n in range(t + 2)]
    if lemma_id in ("goesAbove", "endn"):
        return [{"t": t, "n": n, "k": k} for t in range(13) for n in range(t + 2) for k in range(-t - 1, n + 1)]
    if lemma_id == "stirling":
        return [{"n": n} for n in range(1, 10_001)]
    if lemma_id == "binBound":
        grid = []
        for n in (4, 9, 16, 25, 64, 100, 256, 1000, 1024, 4096):
            for c in (0.5, 1, 1.5, 2, 3):
                lo = math.ceil((n - c * math.sqrt(n)) / 2)
                if c * math.sqrt(n) < n and lo <= math.floor((n + c * math.sqrt(n)) / 2):
                    grid.append({"n": n, "c": c})
        return grid
    ns = ns or [16, 32, 64]
    if lemma_id in ("probLeft", "probLeftRight", "probRight"):
        parity = lemma_id != "probLeft"
        return [
            {"n": n, "i": i, "c": c, "t": t}
            for n in ns
            for c in cs
            for i in range(1, _ceil_half(n) + 1)
            for t in _window_ts(n, c, i, parity, t_ge_n=lemma_id == "probRight")
        ]
    if lemma_id == "leftWorse":
        return [
            {"n": n, "i": i, "t": t}
            for n in ns
            for i in range(1, _ceil_half(n) + 1)
            for t in range(n * n // 4 + 1)
            if (t - (n - i)) % 2 == 0
        ]
    big = [n for n in ns if n >= 20] or [20, 32, 64]
    if lemma_id == "upperProbLeftRight":
        return [{"n": n, "t": t} for n in big for t in range(n - 1, 3 * n * n + 1)]
    if lemma_id == "chernoff":
        return [{"n": n} for n in range(10, 501)]
    if lemma_id == "binSumInf":
        return [{"t1": t1, "cap": 60 + 40 * t1 + 200} for t1 in (0, 1, 2, 5, 10, 20)]
    if lemma_id == "binSumInfHigher":
        return [{"t1": t1, "d": 3, "cap": 600} for t1 in (0, 1, 3)]
    if lemma_id in ("divideWalkinHalf", "sumBoundForMaxMinEnd"):
        return [{"n": n, "t": t} for n in big for t in range(n, 3 * n * n + 1, max(1, n // 4))]
    if lemma_id == "simpleMaxforProductProb":
        return [{"n": n, "t": t, "i": i} for n in big for t in range(1, 3 * n * n + 1, n) for i in range(1, n + 1)]
    if lemma_id == "MaxIsAbovenSquared":
        return [{"n": n, "i": i, "t": t} for n in big for i in range(1, n + 1) for t in range(1, n * n // 40 + 1)]
    if lemma_id in ("upperBoundMaxSum", "upperBoundSum"):
        return [{"n": n} for n in big]
    raise KeyError(f"unknown lemma id {lemma_id!r}")
