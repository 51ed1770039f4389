"""Structured check results, log-log fits and their serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import mpmath
import numpy as np

RELATIONS = ("<=", ">=", "==")

# decimal digits for comparisons against transcendental constants
PRECISION = 50


def to_mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def _ratio(big, small) -> float:
    if small == 0:
        return math.inf if big > 0 else (1.0 if big == 0 else -math.inf)
    return float(to_mpf(big) / to_mpf(small))


def jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, 30)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


@dataclass
class LemmaReport:
    """Outcome of evaluating one stated inequality at one parameter point.

    ``margin`` is the slack ratio oriented so that ``margin >= 1`` exactly
    when an inequality passes; for equalities it is ``|lhs - rhs|``.
    """

    lemma_id: str
    params: dict
    lhs: Any
    rhs: Any
    relation: str = "<="
    passed: bool = field(init=False)
    margin: float = field(init=False)

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        lhs, rhs = self.lhs, self.rhs
        if isinstance(lhs, mpmath.mpf) or isinstance(rhs, mpmath.mpf):
            with mpmath.workdps(PRECISION):
                self._compare(to_mpf(lhs), to_mpf(rhs))
        else:
            self._compare(lhs, rhs)

    def _compare(self, lhs, rhs):
        if self.relation == "<=":
            self.passed = bool(lhs <= rhs)
            self.margin = _ratio(rhs, lhs)
        elif self.relation == ">=":
            self.passed = bool(lhs >= rhs)
            self.margin = _ratio(lhs, rhs)
        else:
            self.passed = bool(lhs == rhs)
            self.margin = float(abs(lhs - rhs))
            return
        # a failing ratio within one ulp of 1 must not round up to 1
        if not self.passed and self.margin >= 1.0:
            self.margin = math.nextafter(1.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "params": jsonable(self.params),
            "lhs": jsonable(self.lhs),
            "rhs": jsonable(self.rhs),
            "relation": self.relation,
            "pass": self.passed,
            "margin": jsonable(self.margin),
        }


@dataclass
class FitResult:
    quantity: str
    points: list[tuple[float, float]]
    slope: float
    r2: float
    expected: float
    tolerance: float
    min_r2: float = 0.98

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected) <= self.tolerance and self.r2 >= self.min_r2

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "points": [[jsonable(n), jsonable(v)] for n, v in self.points],
            "slope": self.slope,
            "r2": self.r2,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "min_r2": self.min_r2,
            "pass": self.passed,
        }


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least squares line through ``(log x, log y)``; returns ``(slope, intercept, r2)``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray([float(y) for y in ys]))
    if lx.size < 2:
        raise ValueError("need at least two points to fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit(quantity: str, ns: Sequence[int], values: Sequence[float], expected: float, tolerance: float) -> FitResult:
    slope, _, r2 = loglog_fit(ns, values)
    return FitResult(quantity, list(zip(ns, values)), slope, r2, expected, tolerance)


def reports_to_json(reports: Iterable[LemmaReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True)


def reports_to_csv(reports: Iterable[LemmaReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lemma_id", "param_json", "lhs", "rhs", "pass", "margin"])
    for r in reports:
        d = r.to_dict()
        writer.writerow([
            d["lemma_id"],
            json.dumps(d["params"], sort_keys=True),
            d["lhs"],
            d["rhs"],
            d["pass"],
            d["margin"],
        ])
    return buf.getvalue()


def fit_to_csv(result: FitResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "value", "fit_slope", "fit_r2"])
    for n, v in result.points:
        writer.writerow([n, repr(float(v)), repr(result.slope), repr(result.r2)])
    return buf.getvalue()
