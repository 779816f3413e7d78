import csv
import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surplus_consensus.deterministic import assemble_system, convergence_factor, run
from surplus_consensus.experiments import (
    TABLE_I_EDGES,
    bounds_csv,
    bounds_table,
    complete_digraph,
    cycle_digraph,
    fixture,
    fmt,
    mse_csv,
    random_balanced_digraph,
    random_connected_undirected,
    random_initial_state,
    random_strongly_connected,
    replicate_seed,
    split_digraph,
    sweep,
    sweep_csv,
    table_one_csv,
    table_one_fixtures,
    table_one_rows,
    trajectory_csv,
)
from surplus_consensus.gossip import exact_mean_square_curve, gossip_system, run_gossip
from surplus_consensus.graph import (
    GraphError,
    build_weight_system,
    closed_strong_components,
    is_balanced,
    is_strongly_connected,
    is_symmetric,
)
from surplus_consensus.linalg import NumericalError


def parse(text):
    return list(csv.reader(io.StringIO(text)))


# ------------------------------------------------------------------ generators


@given(st.integers(2, 12), st.floats(0.2, 1.0), st.integers(0, 10**6))
def test_random_digraph_is_strongly_connected_and_reproducible(n, p, seed):
    g = random_strongly_connected(n, p, seed)
    assert g.n == n and is_strongly_connected(g)
    assert g == random_strongly_connected(n, p, seed)


def test_random_digraph_examples():
    assert random_strongly_connected(2, 1.0, 0).edges == ((0, 1), (1, 0))
    for seed in range(3):
        assert is_strongly_connected(random_strongly_connected(50, 0.5, seed))


def test_random_digraph_depends_on_seed():
    assert random_strongly_connected(8, 0.4, 1) != random_strongly_connected(8, 0.4, 2)


def test_random_digraph_budget():
    with pytest.raises(GraphError, match="increase p_edge"):
        random_strongly_connected(30, 0.01, 0, budget=5)
    with pytest.raises(ValueError):
        random_strongly_connected(5, 0.0, 0)
    with pytest.raises(ValueError):
        random_strongly_connected(1, 0.5, 0)


def test_replicate_seed():
    assert replicate_seed(17, 0) == 17
    seeds = {replicate_seed(17, r) for r in range(50)}
    assert len(seeds) == 50 and replicate_seed(17, 3) == replicate_seed(17, 3)


@given(st.integers(2, 10), st.integers(0, 10**6))
def test_undirected_generator(n, seed):
    g = random_connected_undirected(n, 0.5, seed)
    assert is_symmetric(g) and is_strongly_connected(g)
    ws = build_weight_system(g)
    assert np.allclose(ws.S, np.eye(n) - 2 * ws.L, atol=1e-15)


@given(st.integers(3, 9), st.integers(1, 3), st.integers(0, 10**6))
def test_balanced_generator(n, cycles, seed):
    cycles = min(cycles, n - 2)
    g = random_balanced_digraph(n, cycles, seed)
    assert g.m == cycles * n and is_balanced(g) and is_strongly_connected(g)


def test_balanced_generator_budget():
    with pytest.raises(GraphError, match="edge-disjoint"):
        random_balanced_digraph(3, 3, 0, budget=50)


def test_topologies():
    ring = cycle_digraph(5)
    assert ring.edges == ((0, 1), (1, 2), (2, 3), (3, 4), (4, 0))
    assert complete_digraph(4).m == 12


@pytest.mark.parametrize("seed", range(10))
def test_split_digraph(seed):
    g, x0 = split_digraph(seed)
    assert not is_strongly_connected(g)
    closed = closed_strong_components(g)
    assert len(closed) == 2
    means = sorted(float(np.mean(x0[list(c)])) for c in closed)
    assert means == [-3.0, 1.0]
    res = run(assemble_system(build_weight_system(g), 0.05), x0, max_iter=20_000, tol=1e-8)
    assert not res.converged


def test_initial_state_has_zero_average():
    x = random_initial_state(9, 4)
    assert abs(x.mean()) < 1e-15 and np.array_equal(x, random_initial_state(9, 4))


# ------------------------------------------------------------------ fixtures


def test_fixture_shapes():
    sizes = [len(TABLE_I_EDGES[k]) for k in ("G_a", "G_b", "G_c")]
    assert sizes == [17, 29, 38]
    a, b, c = (set(TABLE_I_EDGES[k]) for k in ("G_a", "G_b", "G_c"))
    assert a < b < c
    for g in table_one_fixtures().values():
        assert g.n == 10 and is_strongly_connected(g) and not is_balanced(g)


def test_fixture_lookup(fig1):
    assert fixture("fig1") == fig1 and fig1.m == 8
    assert fixture("G_b", "uniform") == table_one_fixtures()["G_b"]
    with pytest.raises(GraphError, match="unknown fixture"):
        fixture("nope")


def test_table_one_rows():
    rows = table_one_rows(epsilons=(0.2,))
    assert [r["graph"] for r in rows] == ["G_a", "G_b", "G_c"]
    assert [r["edges"] for r in rows] == [17, 29, 38]
    d = [r["lambda2_d@0.2"] for r in rows]
    g = [r["lambda2_g@0.2"] for r in rows]
    assert d[0] > d[1] > d[2] and g[0] > g[1] > g[2]
    text = table_one_csv(rows)
    assert parse(text)[0] == ["graph", "edges", "lambda2_d@0.2", "lambda2_g@0.2"]


# ------------------------------------------------------------------ sweeps


def test_sweep_means_and_workers():
    graphs = [random_strongly_connected(6, 0.5, replicate_seed(3, r)) for r in range(3)]
    grid = [0.05, 0.2, 0.5]
    rows = sweep(graphs, grid, gossip=True)
    for row in rows:
        vals = [convergence_factor(assemble_system(build_weight_system(g), row.epsilon)) for g in graphs]
        assert row.lambda2_d_mean == pytest.approx(np.mean(vals), abs=1e-15)
        assert row.lambda2_g_mean is not None
    assert sweep(graphs, grid, gossip=True, workers=2) == rows


def test_sweep_errors():
    g = random_strongly_connected(21, 0.3, 0)
    with pytest.raises(NumericalError):
        sweep([g], [0.1], gossip=True)
    with pytest.raises(ValueError):
        sweep([], [0.1])
    with pytest.raises(ValueError):
        sweep([g], [])


def test_bounds_table():
    rows = bounds_table([2, 3, 8], samples=50, seed=1)
    assert rows[0].bound_cyclic is None and rows[1].bound_cyclic > rows[2].bound_cyclic
    assert rows[0].bound_undirected == 0.75
    lines = parse(bounds_csv(rows))
    assert lines[0] == ["n", "bound_sampled", "bound_undirected", "bound_cyclic"]
    assert lines[1][3] == "" and lines[1][2] == "0.75"


# ------------------------------------------------------------------ CSV output


def test_fmt_roundtrips():
    for x in (0.1, 1 / 3, 1e-300, -2.5, 7):
        assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt(float("nan")) == "nan" and fmt(np.int64(4)) == "4"


def test_deterministic_trajectory_csv(fig1):
    res = run(assemble_system(build_weight_system(fig1), 0.1), [1.0, 2, 3, 4], max_iter=5, tol=0)
    lines = parse(trajectory_csv(res))
    assert lines[0] == ["k", "x_1", "x_2", "x_3", "x_4", "s_1", "s_2", "s_3", "s_4"]
    assert [row[0] for row in lines[1:]] == [str(k) for k in range(6)]
    assert [float(v) for v in lines[1][1:]] == [1, 2, 3, 4, 0, 0, 0, 0]
    assert np.array_equal(np.array([[float(v) for v in row[1:5]] for row in lines[1:]]), res.states)


def test_gossip_trajectory_csv(fig1):
    res = run_gossip(gossip_system(fig1, 0.1), [1.0, 2, 3, 4], max_iter=4, tol=0, seed=1)
    lines = parse(trajectory_csv(res))
    assert lines[0][-1] == "edge"
    assert lines[1][-1] == ""
    for row, (j, i) in zip(lines[2:], res.edges[1:]):
        assert row[-1] == f"{j + 1}->{i + 1}" and (j, i) in fig1.edges


def test_mse_csv(fig1):
    curve = exact_mean_square_curve(gossip_system(fig1, 0.1), [1.0, 2, 3, 4], horizon=3)
    lines = parse(mse_csv(curve))
    assert lines[0] == ["k", "mse_full", "mse_state", "stderr"]
    assert lines[1] == ["0", "5.0", "5.0", "0.0"]
    assert len(lines) == 5


def test_sweep_csv():
    graphs = [cycle_digraph(4)]
    lines = parse(sweep_csv(sweep(graphs, [0.1, 0.2])))
    assert lines[0] == ["epsilon", "lambda2_d_mean", "lambda2_g_mean"]
    assert lines[1][0] == "0.1" and lines[1][2] == ""
