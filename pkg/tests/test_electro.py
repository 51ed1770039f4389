import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from sandpile_lab import electro as el
from sandpile_lab.grid import SINK, GridShape


def sympy_potential(shape, source):
    """Independent route: symbolic harmonic system built from the neighbor table."""
    syms = sympy.symbols(f"x0:{shape.size}")
    src = shape.index(source)
    eqs = [syms[src] - 1]
    for v in range(shape.size):
        if v == src:
            continue
        nb = [syms[w] for w in shape.neighbors[v] if w != SINK]
        eqs.append(shape.degree * syms[v] - sum(nb))
    sol = sympy.solve(eqs, syms)
    return [Fraction(int(sol[s].p), int(sol[s].q)) for s in syms]


@pytest.mark.parametrize("n,d,source", [(3, 1, (2,)), (3, 2, (2, 2)), (3, 2, (1, 3)), (2, 3, (1, 1, 2))])
def test_exact_potentials_match_sympy(n, d, source):
    shape = GridShape(n, d)
    field = el.potentials(shape, source, "exact")
    assert list(field.values) == sympy_potential(shape, source)
    assert field.harmonic_residual() == 0


def test_path_example_values():
    field = el.potentials(GridShape(3, 1), (2,), "exact")
    # the hitting probability from an end of the 3-path to its middle is 1/2
    assert field[(1,)] == Fraction(1, 2) and field[(3,)] == Fraction(1, 2)
    assert field[(2,)] == 1


def test_path_potential_examples():
    assert el.path_potential(3, 2, 1) == Fraction(2, 3)
    assert el.path_potential(5, 2, 4) == Fraction(1, 2)
    assert el.path_potential(7, 4, 4) == 1
    with pytest.raises(ValueError):
        el.path_potential(3, 0, 1)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16, 33, 64])
def test_path_potential_equals_solver(n):
    shape = GridShape(n, 1)
    rows = el.exact_potential_rows(shape, [(v,) for v in range(1, n + 1)])
    for v1 in range(1, n + 1):
        row = rows[(v1,)]
        for u1 in range(1, n + 1):
            assert row[u1 - 1] == el.path_potential(n, u1, v1)


def test_symmetric_midpoints():
    f = el.potentials(GridShape(3, 2), (2, 2), "exact")
    vals = {f[v] for v in [(1, 2), (2, 1), (3, 2), (2, 3)]}
    assert len(vals) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.data())
def test_float_field_invariants(n, data):
    shape = GridShape(n, 2)
    u = tuple(data.draw(st.integers(1, n)) for _ in range(2))
    f = el.potentials(shape, u)
    assert f[u] == 1.0
    assert f.values.min() >= 0 and f.values.max() <= 1 + 1e-12
    assert f.harmonic_residual() < 1e-10
    assert f.residual <= 1e-12
    # maximum principle: the only strict maximum is the source
    assert np.sum(f.values >= 1 - 1e-12) == 1


def test_exact_and_float_agree():
    shape = GridShape(6, 2)
    ex = el.potentials(shape, (2, 5), "exact")
    fl = el.potentials(shape, (2, 5), "float")
    assert np.allclose(np.array(ex.values, dtype=float), fl.values, rtol=1e-10)


def test_green_route_matches_dirichlet_route():
    shape = GridShape(7, 2)
    P = el.potential_matrix(shape)
    for u in [(1, 1), (4, 4), (7, 2)]:
        f = el.potentials(shape, u)
        assert np.allclose(P[shape.index(u)], f.values, rtol=1e-9)


def test_exact_cap_and_backend():
    with pytest.raises(ValueError):
        el.potentials(GridShape(65, 2), (1, 1), "exact")
    with pytest.raises(ValueError):
        el.potentials(GridShape(3, 2), (1, 1), "magic")


def test_resistance_examples():
    assert el.effective_resistance(GridShape(1, 2), (1, 1), "exact") == Fraction(1, 4)
    # single vertex of a path: two unit resistors in parallel
    assert el.effective_resistance(GridShape(1, 1), (1,), "exact") == Fraction(1, 2)
    shape = GridShape(9, 2)
    i = shape.index((3, 4))
    assert math.isclose(el.effective_resistance(shape, (3, 4)), el.green_matrix(shape)[i, i], rel_tol=1e-10)


def test_path_resistance_closed_form():
    # series/parallel: u-1 and n-u resistors to the two ends
    n = 9
    for u in range(1, n + 1):
        r = el.effective_resistance(GridShape(n, 1), (u,), "exact")
        assert r == Fraction(u * (n + 1 - u), n + 1)


@pytest.mark.parametrize("n", [2, 5, 12])
def test_resistance_bounds_hold(n):
    reps = el.check_bounded_resistance(GridShape(n, 2))
    assert all(r.passed for r in reps)


def test_pair_resistance_two_nodes():
    # 2x2 plain grid: adjacent vertices, one direct edge in parallel with a path of three
    assert math.isclose(el.grid_pair_resistance(2, (1, 1), (1, 2)), 0.75, rel_tol=1e-10)
    assert math.isclose(el.grid_pair_resistance(2, (1, 1), (2, 2)), 1.0, rel_tol=1e-10)
    assert el.grid_pair_resistance(3, (1, 1), (1, 1)) == 0.0


def test_reciprocity_exact_and_float():
    shape = GridShape(4, 2)
    verts = [(1, 1), (2, 3), (4, 4), (3, 1)]
    pairs = [(u, v) for u in verts for v in verts]
    reps = el.verify_reciprocity(shape, pairs, "exact")
    assert all(r.passed and r.relation == "==" for r in reps)
    assert all(r.lhs == r.rhs for r in reps)
    reps = el.verify_reciprocity(GridShape(4, 3), [((1, 1, 1), (2, 3, 4)), ((4, 1, 2), (2, 2, 2))], "float")
    assert all(r.passed for r in reps)


def test_reduction_quantities_consistency():
    for n in (3, 6, 10):
        q = el.reduction_quantities(GridShape(n, 2))
        assert 0 < q.lower_q <= q.upper_q <= q.max_sum * q.lower_q * (1 + 1e-12)
        u, v = q.lower_arg
        assert {u, v} == {(1, 1), (n, n)} or {u, v} == {(1, n), (n, 1)}
    with pytest.raises(ValueError):
        el.reduction_quantities(GridShape(40, 2))


def test_monte_carlo_matches_solver():
    shape = GridShape(5, 2)
    exact = float(el.potentials(shape, (3, 3), "exact")[(3, 2)])
    p, se = el.monte_carlo_escape(shape, (3, 2), (3, 3), 200_000, seed=1)
    assert abs(p - exact) <= 4 * se
    p, se = el.monte_carlo_escape(GridShape(3, 1), (1,), (2,), 200_000, seed=2)
    assert abs(p - 0.5) <= 4 * se


def test_monte_carlo_determinism():
    shape = GridShape(6, 2)
    a = el.monte_carlo_escape(shape, (1, 1), (6, 6), 5000, seed=3, block_size=1000)
    b = el.monte_carlo_escape(shape, (1, 1), (6, 6), 5000, seed=3, block_size=1000)
    assert a == b
    assert el.monte_carlo_escape(shape, (2, 2), (2, 2), 10, seed=0) == (1.0, 0.0)
    with pytest.raises(ValueError):
        el.monte_carlo_escape(shape, (2, 2), (1, 1), 0, seed=0)


def test_nn_is_min_and_swap_small():
    for n in (4, 8):
        shape = GridShape(n, 2)
        reps = el.check_nn_is_min(shape)
        assert reps and all(r.passed for r in reps)
        assert el.check_swap_source_target(shape).passed


def test_decoupling_exact_small():
    for n in (3, 5, 8):
        assert el.check_decoupling(GridShape(n, 2), exact=True).passed


def test_corner_to_corner():
    for n in (4, 16, 40):
        assert all(r.passed for r in el.check_corner_to_corner(n))


def test_corner_series_below_solver():
    from sandpile_lab.walks import corner_potential_series

    n = 8
    exact = el.potentials(GridShape(n, 2), (n, n), "exact")[(1, 1)]
    partial = corner_potential_series(n, (1, 1), 4 * n * n)
    assert 0 < partial <= exact
