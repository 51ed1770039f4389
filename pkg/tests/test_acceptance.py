"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -rA`` to see the lines.
"""
import time

import mpmath
import numpy as np

from sandpile_lab import electro, harness, lemmas, sandpile
from sandpile_lab.grid import GridShape


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'} {title}: {detail}")
    assert ok, detail


def test_01_abelian_conservation():
    start = time.perf_counter()
    check = harness.abelian_check(GridShape(8, 2), n_configs=200, n_orders=50, seed=7, high=101)
    elapsed = time.perf_counter() - start
    ok = check.passed and elapsed < 10
    verdict(1, "abelianness + conservation (200 configs x 50 orders, 8x8)", ok,
            f"{check.details}, {elapsed:.1f}s")


def test_02_burning_vs_scc():
    start = time.perf_counter()
    checks = [harness.burning_oracle(GridShape(2, 2)), harness.burning_oracle(GridShape(3, 1))]
    elapsed = time.perf_counter() - start
    states = [c.details["states"] for c in checks]
    ok = all(c.passed for c in checks) and states == [256, 8] and elapsed < 5
    mism = sum(len(c.details["mismatched_codes"]) for c in checks)
    verdict(2, "burning test vs SCC oracle (2x2 and path n=3)", ok, f"states={states} mismatches={mism}, {elapsed:.1f}s")


def test_03_tcl_scaling():
    start = time.perf_counter()
    res = harness.fit_quantity("tcl", [8, 12, 16, 24, 32, 48], 2)
    elapsed = time.perf_counter() - start
    ok = res.passed and res.tolerance == 0.4 and elapsed < 600
    verdict(3, "corner drive scaling d=2", ok,
            f"slope={res.slope:.3f} (4 +- 0.4) r2={res.r2:.5f}, {elapsed:.1f}s")


def test_04_corner_potential_scaling_and_sandwich():
    start = time.perf_counter()
    ns = [8, 16, 32, 64, 128]
    res = harness.fit_quantity("corner-potential", ns, 2)
    worst_lower, worst_upper = mpmath.inf, mpmath.inf
    sandwich_ok = True
    with mpmath.workdps(50):
        for n in ns:
            shape = GridShape(n, 2)
            field = electro.corner_field(shape)
            lower = mpmath.e ** -100 / mpmath.mpf(n) ** 4
            upper = mpmath.e**100 / mpmath.mpf(n) ** 4
            for u in shape.quadrant():
                pi = mpmath.mpf(float(field[u]))
                worst_lower = min(worst_lower, pi / (lower * u[0] * u[1]))
                worst_upper = min(worst_upper, upper / pi)
                sandwich_ok &= lower * u[0] * u[1] <= pi <= upper
            sandwich_ok &= electro.check_voltage_lower(shape, field).passed
            sandwich_ok &= electro.check_corner_upper(shape, field).passed
    elapsed = time.perf_counter() - start
    ok = res.passed and res.tolerance == 0.3 and sandwich_ok and elapsed < 300
    verdict(4, "corner potential scaling + literal sandwich", ok,
            f"slope={res.slope:.3f} (-4 +- 0.3) r2={res.r2:.5f}; min lower slack={mpmath.nstr(worst_lower, 4)}, "
            f"min upper slack={mpmath.nstr(worst_upper, 4)}, {elapsed:.1f}s")


def test_05_resistance_bounds():
    start = time.perf_counter()
    violations, count, lo, hi = 0, 0, np.inf, 0.0
    for n in range(2, 49):
        shape = GridShape(n, 2)
        diag = np.diag(electro.green_matrix(shape))
        count += diag.size
        lo, hi = min(lo, diag.min()), max(hi, diag.max())
        violations += int(((diag < 0.25) | (diag > 2 * np.log(n) + 1)).sum())
        violations += sum(not r.passed for r in electro.check_bounded_resistance(shape))
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120
    verdict(5, "1/4 <= R_eff <= 2 ln n + 1, all vertices, n=2..48", ok,
            f"{count} vertices, range [{lo:.4f}, {hi:.4f}], violations={violations}, {elapsed:.1f}s")


def test_06_reciprocity():
    start = time.perf_counter()
    exact = []
    for n in (4, 8, 12):
        exact += harness.reciprocity_reports(GridShape(n, 2), seed=7, k=6, backend="exact")
    floats = harness.reciprocity_reports(GridShape(32, 2), seed=7, k=6, backend="float")
    elapsed = time.perf_counter() - start
    exact_ok = all(r.passed and r.relation == "==" and r.lhs == r.rhs for r in exact)
    worst = max(float(r.lhs) for r in floats)
    ok = exact_ok and len(exact) == 3 * 30 and all(r.passed for r in floats) and worst <= 1e-9 and elapsed < 120
    verdict(6, "reciprocity exact (n=4,8,12) and float (n=32)", ok,
            f"{len(exact)} exact pairs equal={exact_ok}, worst float rel err={worst:.2e}, {elapsed:.1f}s")


def test_07_potential_lemmas():
    reports = []
    for n in (4, 8, 16):
        reports += electro.check_nn_is_min(GridShape(n, 2))
    for n in range(4, 33):
        reports.append(electro.check_swap_source_target(GridShape(n, 2)))
    for n in (4, 8, 12, 16):
        reports.append(electro.check_decoupling(GridShape(n, 2), exact=True))
    reports += electro.check_nn_is_min(GridShape(8, 3))
    by_id = {}
    for r in reports:
        by_id.setdefault(r.lemma_id, []).append(r.passed)
    ok = all(all(v) for v in by_id.values()) and set(by_id) == {
        "nnIsMin", "swapSourceTarget", "decoupling", "cornerIsMinForHigherDimension"
    }
    summary = ", ".join(f"{k} {sum(v)}/{len(v)}" for k, v in sorted(by_id.items()))
    verdict(7, "potential lemma suite", ok, summary)


def test_08_walk_exactness():
    start = time.perf_counter()
    checks = harness.walk_exactness(t_max=16, corridor_t_max=20)
    elapsed = time.perf_counter() - start
    ok = all(c.passed for c in checks) and elapsed < 300
    detail = ", ".join(f"{c.name}: {c.details.get('mismatches', c.details)}" for c in checks)
    verdict(8, "walk counts vs brute force (t<=16, corridor t<=20)", ok, f"{detail}, {elapsed:.1f}s")


def test_09_walk_inequalities():
    start = time.perf_counter()
    counts, failures = {}, []
    for lemma_id in lemmas.LEMMA_IDS:
        for r in harness.walk_lemma_reports(lemma_id, [16, 32, 64]):
            good, total = counts.get(lemma_id, (0, 0))
            counts[lemma_id] = (good + r.passed, total + 1)
            if not r.passed:
                failures.append((lemma_id, r.params))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 600
    summary = ", ".join(f"{k} {g}/{t}" for k, (g, t) in counts.items() if g != t) or "all ids clean"
    verdict(9, "walk inequality suite", ok,
            f"{sum(t for _, t in counts.values())} points, failing: {summary}; first failures {failures[:3]}, {elapsed:.1f}s")


def test_10_higher_dimension():
    start = time.perf_counter()
    pot = harness.fit_quantity("corner-potential", [6, 8, 12, 16], 3)
    drive = harness.fit_quantity("tcl", [4, 6, 8], 3)
    elapsed = time.perf_counter() - start
    ok = pot.passed and drive.passed and pot.tolerance == 0.6 and drive.tolerance == 0.8 and elapsed < 900
    verdict(10, "d=3 exponents", ok,
            f"potential slope={pot.slope:.3f} (-7 +- 0.6) r2={pot.r2:.5f}; "
            f"drive slope={drive.slope:.3f} (7 +- 0.8) r2={drive.r2:.5f}, {elapsed:.1f}s")


def test_11_render(tmp_path):
    start = time.perf_counter()
    shape = GridShape(128, 2)
    checkpoints = [2**20, 2**22, 2**24]
    paths, odos = sandpile.render_frames(shape, (1, 1), checkpoints, tmp_path)
    valid = True
    for p in paths:
        rgb = sandpile.read_ppm(p)
        colors = {tuple(c) for c in rgb.reshape(-1, 3)}
        valid &= rgb.shape == (128, 128, 3) and colors <= set(sandpile.PALETTE)
        valid &= p.read_text().startswith("P3\n128 128\n255\n")
    monotone = all((a.support() <= b.support()).all() for a, b in zip(odos, odos[1:]))
    supports = [int(o.support().sum()) for o in odos]
    elapsed = time.perf_counter() - start
    ok = valid and monotone and [p.name for p in paths] == [f"frame_{c}.ppm" for c in checkpoints] and elapsed < 120
    verdict(11, "render n=128 corner drive", ok, f"support={supports} monotone={monotone} valid_p3={valid}, {elapsed:.1f}s")
