from collections import deque

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandpile_lab import sandpile as sp
from sandpile_lab.grid import SINK, GridShape


def naive_stabilize(shape, grains):
    """One toppling at a time, FIFO order, plain Python ints."""
    g = [int(x) for x in grains]
    odo = [0] * shape.size
    nbr = shape.neighbors.tolist()
    deg = shape.degree
    queue = deque(u for u in range(shape.size) if g[u] >= deg)
    while queue:
        u = queue.popleft()
        if g[u] < deg:
            continue
        g[u] -= deg
        odo[u] += 1
        for v in nbr[u]:
            if v != SINK:
                g[v] += 1
                if g[v] >= deg:
                    queue.append(v)
        if g[u] >= deg:
            queue.append(u)
    return g, odo


def config(shape, values):
    return sp.Config(shape, np.array(values, dtype=np.int64))


def test_empty_configs():
    for n, d in [(1, 2), (3, 3)]:
        c = sp.new_config(GridShape(n, d))
        assert c.total() == 0 and c.grains.size == n**d


def test_corner_toppling_2x2():
    shape = GridShape(2, 2)
    out, odo = sp.stabilize(config(shape, [4, 0, 0, 0]))
    assert out.grains.tolist() == [0, 1, 1, 0]
    assert odo.topples.tolist() == [1, 0, 0, 0]
    assert odo.to_sink() == 2


def test_single_vertex():
    shape = GridShape(1, 2)
    out, odo = sp.stabilize(config(shape, [4]))
    assert out.grains.tolist() == [0] and odo.total() == 1 and odo.to_sink() == 4


def test_stable_is_fixed_point():
    shape = GridShape(3, 2)
    c = config(shape, [3, 1, 0, 2, 3, 3, 0, 0, 1])
    out, odo = sp.stabilize(c)
    assert out == c and odo.total() == 0


def test_config_is_immutable_and_copies():
    shape = GridShape(2, 2)
    arr = np.array([1, 2, 3, 0], dtype=np.int64)
    c = sp.Config(shape, arr)
    arr[0] = 99
    assert c[(1, 1)] == 1
    with pytest.raises(ValueError):
        c.grains[0] = 5


def test_negative_grains_rejected():
    with pytest.raises(ValueError):
        config(GridShape(2, 2), [0, -1, 0, 0])


def test_overflow_detected():
    shape = GridShape(2, 2)
    c = config(shape, [sp.INT64_MAX - 1, 0, 0, 0])
    with pytest.raises(OverflowError):
        c.with_grains((1, 1), 5)


grain_arrays = st.integers(2, 5).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.integers(0, 40), min_size=n * n, max_size=n * n))
)


@settings(max_examples=60, deadline=None)
@given(grain_arrays)
def test_matches_naive_toppler(case):
    n, values = case
    shape = GridShape(n, 2)
    out, odo = sp.stabilize(config(shape, values))
    g, o = naive_stabilize(shape, values)
    assert out.grains.tolist() == g
    assert odo.topples.tolist() == o


@settings(max_examples=60, deadline=None)
@given(grain_arrays)
def test_conservation_and_idempotence(case):
    n, values = case
    shape = GridShape(n, 2)
    c = config(shape, values)
    out, odo = sp.stabilize(c)
    assert c.total() == out.total() + odo.to_sink()
    again, odo2 = sp.stabilize(out)
    assert again == out and odo2.total() == 0


@settings(max_examples=30, deadline=None)
@given(grain_arrays, st.integers(0, 2**31))
def test_random_order_agrees(case, seed):
    n, values = case
    c = config(GridShape(n, 2), values)
    assert sp.stabilize(c) == sp.stabilize_in_order(c, seed)


@pytest.mark.parametrize("n,d", [(1, 1), (5, 1), (3, 3)])
def test_other_dimensions_match_naive(n, d):
    shape = GridShape(n, d)
    rng = np.random.default_rng(3)
    values = rng.integers(0, 30, shape.size)
    out, odo = sp.stabilize(config(shape, values))
    g, o = naive_stabilize(shape, values)
    assert out.grains.tolist() == g and odo.topples.tolist() == o


def test_add_and_stabilize_batch_equivalence():
    rng = np.random.default_rng(11)
    for n in (2, 3, 5, 8):
        shape = GridShape(n, 2)
        base, _ = sp.stabilize(config(shape, rng.integers(0, 4, shape.size)))
        site = tuple(int(x) for x in rng.integers(1, n + 1, 2))
        for k in (1, 2, 7, 33, 64):
            batched, odo = sp.add_and_stabilize(base, site, k)
            c, total = base, np.zeros(shape.size, dtype=np.int64)
            for _ in range(k):
                c, step = sp.add_and_stabilize(c, site, 1)
                total += step.topples
            assert batched == c
            assert np.array_equal(odo.topples, total)


def test_add_threshold_and_precondition():
    shape = GridShape(2, 2)
    c = config(shape, [3, 0, 0, 0])
    _, odo = sp.add_and_stabilize(c, (1, 1), 1)
    assert odo.total() >= 1
    with pytest.raises(ValueError):
        sp.add_and_stabilize(c, (1, 1), 0)
    with pytest.raises(ValueError):
        sp.add_and_stabilize(c, (3, 1), 1)


def test_burning_examples():
    shape = GridShape(2, 2)
    assert sp.burning_test(config(shape, [3, 3, 3, 3]))
    assert not sp.burning_test(sp.new_config(shape))
    with pytest.raises(ValueError):
        sp.burning_test(config(shape, [4, 0, 0, 0]))


def scc_recurrent(shape):
    """Recurrent states = terminal SCC of the add-anywhere graph, built with networkx."""
    total = shape.degree**shape.size
    graph = nx.DiGraph()
    for code in range(total):
        c = sp.decode(shape, code)
        for v in shape.vertices():
            nxt, _ = sp.add_and_stabilize(c, v, 1)
            graph.add_edge(code, sp.encode(nxt))
    cond = nx.condensation(graph)
    terminal = [k for k in cond.nodes if cond.out_degree(k) == 0]
    assert len(terminal) == 1
    return set(cond.nodes[terminal[0]]["members"]), graph


@pytest.mark.parametrize("n,d", [(2, 2), (3, 1), (2, 1)])
def test_burning_matches_scc_oracle(n, d):
    shape = GridShape(n, d)
    recurrent, _ = scc_recurrent(shape)
    for code in range(shape.degree**shape.size):
        assert sp.burning_test(sp.decode(shape, code)) == (code in recurrent)
    mask = sp.recurrent_classes(sp.transition_table(shape))
    assert set(np.flatnonzero(mask).tolist()) == recurrent


def longest_transient_path(shape):
    recurrent, graph = scc_recurrent(shape)
    if 0 in recurrent:
        return 0
    transient = graph.subgraph(set(graph.nodes) - recurrent)
    reach = nx.descendants(transient, 0) | {0}
    dag = transient.subgraph(reach)
    return nx.dag_longest_path_length(dag)


@pytest.mark.parametrize("n,d", [(2, 2), (2, 1), (3, 1), (1, 2)])
def test_tcl_exact_matches_longest_path(n, d):
    shape = GridShape(n, d)
    assert sp.tcl_exact(shape) == longest_transient_path(shape)


def test_tcl_exact_golden():
    # frozen from the networkx longest-path oracle above
    assert sp.tcl_exact(GridShape(2, 2)) == 8
    assert sp.tcl_exact(GridShape(2, 1)) == 0
    with pytest.raises(ValueError):
        sp.tcl_exact(GridShape(4, 2))


def linear_scan(shape, site):
    c = sp.new_config(shape)
    m = 0
    while not sp.burning_test(c):
        c, _ = sp.add_and_stabilize(c, site, 1)
        m += 1
    return m


@pytest.mark.parametrize("n,d", [(1, 2), (2, 2), (3, 2), (4, 2), (4, 1), (2, 3)])
def test_drive_matches_linear_scan(n, d):
    shape = GridShape(n, d)
    rep = sp.drive_to_recurrence(shape, shape.corner())
    assert rep.recurrent_at == linear_scan(shape, shape.corner())
    assert rep.grains_added >= rep.recurrent_at


@pytest.mark.parametrize("n,d", [(2, 2), (3, 1), (2, 1)])
def test_tcl_dominates_corner_drive(n, d):
    shape = GridShape(n, d)
    assert sp.tcl_exact(shape) >= sp.drive_to_recurrence(shape).recurrent_at - 1


def test_recurrence_monotone_along_drive():
    shape = GridShape(6, 2)
    m = sp.drive_to_recurrence(shape).recurrent_at
    c, _ = sp.add_and_stabilize(sp.new_config(shape), (1, 1), m - 1)
    assert not sp.burning_test(c)
    rng = np.random.default_rng(5)
    c, _ = sp.add_and_stabilize(c, (1, 1), 1)
    for _ in range(40):
        assert sp.burning_test(c)
        site = tuple(int(x) for x in rng.integers(1, 7, 2))
        c, _ = sp.add_and_stabilize(c, site, int(rng.integers(1, 20)))


def test_drive_golden_values():
    # frozen from runs of the drive itself, checked against the linear scan for n <= 8
    assert sp.drive_to_recurrence(GridShape(8, 2)).recurrent_at == 3254
    assert linear_scan(GridShape(8, 2), (1, 1)) == 3254


def test_drive_report_json():
    rep = sp.drive_to_recurrence(GridShape(3, 2), (1, 1))
    import json

    data = json.loads(rep.to_json())
    assert set(data) == {"site", "grains_added", "recurrent_at", "total_topplings", "wall_time"}
    assert data["site"] == [1, 1]


def test_encode_decode_roundtrip():
    shape = GridShape(2, 2)
    for code in (0, 1, 77, 255):
        assert sp.encode(sp.decode(shape, code)) == code


def test_ppm_roundtrip(tmp_path):
    grid = np.array([[0, 1], [2, 3], [3, 0]])
    path = tmp_path / "x.ppm"
    sp.write_ppm(path, grid)
    assert path.read_text().startswith("P3\n2 3\n255\n")
    rgb = sp.read_ppm(path)
    assert rgb.shape == (3, 2, 3)
    assert tuple(rgb[1, 1]) == sp.PALETTE[3]
    assert tuple(rgb[0, 0]) == sp.PALETTE[0]


def test_render_small(tmp_path):
    shape = GridShape(8, 2)
    paths, odos = sp.render_frames(shape, (1, 1), [0], tmp_path)
    assert paths[0].name == "frame_0.ppm"
    assert (sp.read_ppm(paths[0]) == 255).all()

    shape = GridShape(16, 2)
    m = sp.drive_to_recurrence(shape).recurrent_at
    paths, odos = sp.render_frames(shape, (1, 1), [m, 2 * m], tmp_path)
    assert odos[1].support().all()
    assert (odos[0].support() <= odos[1].support()).all()
    with pytest.raises(ValueError):
        sp.render_frames(GridShape(3, 3), (1, 1, 1), [1], tmp_path)
    with pytest.raises(ValueError):
        sp.render_frames(shape, (1, 1), [5, 2], tmp_path)
