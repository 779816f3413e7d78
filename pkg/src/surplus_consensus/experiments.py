"""Graph generators, shipped fixtures and the tables behind the experiments.

Every generator takes an integer seed and draws from its own tagged stream
(see :mod:`surplus_consensus.rng`), so results are reproducible and
independent of call order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .deterministic import RunResult, assemble_system, convergence_factor
from .gossip import MSECurve, convergence_factor_gossip, gossip_system
from .graph import Digraph, GraphError, build_weight_system, is_strongly_connected
from .linalg import DIMENSION_CAP, NumericalError
from .rng import derive_seed, stream
from .special import balanced_epsilon_bound, cyclic_epsilon_bound, undirected_epsilon_bound

__all__ = [
    "RESAMPLE_BUDGET",
    "random_strongly_connected",
    "replicate_seed",
    "random_connected_undirected",
    "random_balanced_digraph",
    "cycle_digraph",
    "complete_digraph",
    "split_digraph",
    "random_initial_state",
    "TABLE_I_EDGES",
    "TABLE_I_EPSILONS",
    "FIG1_EDGES",
    "FIXTURES",
    "fixture",
    "table_one_fixtures",
    "table_one_rows",
    "SweepRow",
    "sweep",
    "BoundsRow",
    "bounds_table",
    "trajectory_csv",
    "mse_csv",
    "sweep_csv",
    "bounds_csv",
    "table_one_csv",
    "fmt",
]

RESAMPLE_BUDGET = 1000


def _adjacency_edges(adj: np.ndarray) -> list[tuple[int, int]]:
    js, is_ = np.nonzero(adj)
    return [(int(j), int(i)) for j, i in zip(js, is_)]


def random_strongly_connected(
    n: int, p_edge: float, seed: int, scheme: str = "example1", budget: int = RESAMPLE_BUDGET
) -> Digraph:
    """Each ordered pair is an edge with probability ``p_edge``; redraw until strongly connected."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (0.0 < p_edge <= 1.0):
        raise ValueError("p_edge must lie in (0, 1]")
    rng = stream(seed, "random-digraph", n, repr(float(p_edge)))
    for _ in range(budget):
        adj = rng.random((n, n)) < p_edge
        np.fill_diagonal(adj, False)
        g = Digraph.from_edges(n, _adjacency_edges(adj), scheme=scheme)
        if is_strongly_connected(g):
            return g
    raise GraphError(
        f"no strongly connected digraph after {budget} draws (n={n}, p_edge={p_edge}); increase p_edge"
    )


def replicate_seed(seed: int, r: int) -> int:
    """Seed of the ``r``-th graph in a batch; replicate 0 reuses ``seed`` itself."""
    return int(seed) if r == 0 else derive_seed(seed, "replicate", r)


def random_connected_undirected(
    n: int, p_edge: float, seed: int, scheme: str = "regular", budget: int = RESAMPLE_BUDGET
) -> Digraph:
    """Symmetric digraph (both directions of every link) that is connected."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = stream(seed, "random-undirected", n, repr(float(p_edge)))
    for _ in range(budget):
        upper = np.triu(rng.random((n, n)) < p_edge, 1)
        adj = upper | upper.T
        g = Digraph.from_edges(n, _adjacency_edges(adj), scheme=scheme)
        if is_strongly_connected(g):
            return g
    raise GraphError(f"no connected graph after {budget} draws (n={n}, p_edge={p_edge})")


def random_balanced_digraph(n: int, cycles: int, seed: int, budget: int = RESAMPLE_BUDGET) -> Digraph:
    """Union of edge-disjoint random Hamiltonian cycles.

    Every node has equal in- and out-degree, so constant edge weights make it
    balanced; the ``regular`` scheme gives ``S = I - 2L``.
    """
    if n < 3 or cycles < 1:
        raise ValueError("need n >= 3 and at least one cycle")
    rng = stream(seed, "random-balanced", n, cycles)
    edges: set[tuple[int, int]] = set()
    added = 0
    for _ in range(budget):
        if added == cycles:
            break
        perm = rng.permutation(n)
        cyc = {(int(perm[k]), int(perm[(k + 1) % n])) for k in range(n)}
        if edges.isdisjoint(cyc):
            edges |= cyc
            added += 1
    if added < cycles:
        raise GraphError(f"could not place {cycles} edge-disjoint cycles on {n} nodes")
    return Digraph.from_edges(n, sorted(edges), scheme="regular")


def cycle_digraph(n: int, scheme: str = "regular") -> Digraph:
    """The ring ``0 -> 1 -> ... -> n-1 -> 0``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return Digraph.from_edges(n, [(k, (k + 1) % n) for k in range(n)], scheme=scheme)


def complete_digraph(n: int, scheme: str = "example1") -> Digraph:
    return Digraph.from_edges(n, [(j, i) for j in range(n) for i in range(n) if i != j], scheme=scheme)


def split_digraph(seed: int, scheme: str = "example1") -> tuple[Digraph, np.ndarray]:
    """A digraph with two closed strong components and an initial state that splits them.

    The components are random rings with chords on 2..5 nodes each; up to two
    transient nodes listen to both. Neither component receives anything from
    outside; the first starts at ``+1`` and the second at ``-3``, so their
    states cannot meet at a common average.
    """
    rng = stream(seed, "split-digraph")
    sizes = [int(rng.integers(2, 6)), int(rng.integers(2, 6))]
    transient = int(rng.integers(0, 3))
    n = sum(sizes) + transient
    edges: set[tuple[int, int]] = set()
    offset = 0
    for size in sizes:
        nodes = offset + rng.permutation(size)
        for k in range(size):
            edges.add((int(nodes[k]), int(nodes[(k + 1) % size])))
        for j in range(size):
            for i in range(size):
                if i != j and rng.random() < 0.3:
                    edges.add((offset + j, offset + i))
        offset += size
    first = list(range(sizes[0]))
    second = list(range(sizes[0], sizes[0] + sizes[1]))
    for t in range(offset, n):
        edges.add((int(rng.choice(first)), t))
        edges.add((int(rng.choice(second)), t))
    g = Digraph.from_edges(n, sorted(edges), scheme=scheme)
    x0 = np.concatenate([np.full(sizes[0], 1.0), np.full(sizes[1], -3.0), rng.normal(size=transient)])
    return g, x0


def random_initial_state(n: int, seed: int) -> np.ndarray:
    """Standard normal draws shifted so the average is exactly zero."""
    x = stream(seed, "initial-state", n).normal(size=n)
    return x - np.mean(x)


# Nested digraphs on 10 nodes with 17, 29 and 38 edges. All three are strongly
# connected, and no node has equal in- and out-degree, so none is balanced
# under uniform weights. Produced by scripts/find_table1_fixtures.py.
TABLE_I_EDGES: dict[str, tuple[tuple[int, int], ...]] = {
    "G_a": (
        (0, 2), (1, 0), (1, 7), (2, 3), (2, 5), (3, 6), (4, 3), (4, 8), (5, 1), (5, 2),
        (5, 8), (6, 0), (6, 7), (7, 9), (8, 4), (9, 2), (9, 8),
    ),
    "G_b": (
        (0, 2), (1, 0), (1, 6), (1, 7), (1, 8), (2, 3), (2, 5), (3, 6), (3, 7), (3, 9),
        (4, 3), (4, 6), (4, 8), (5, 1), (5, 2), (5, 6), (5, 7), (5, 8), (6, 0), (6, 7),
        (7, 4), (7, 9), (8, 4), (8, 7), (9, 0), (9, 1), (9, 2), (9, 5), (9, 8),
    ),
    "G_c": (
        (0, 2), (0, 5), (1, 0), (1, 6), (1, 7), (1, 8), (2, 3), (2, 4), (2, 5), (3, 1),
        (3, 2), (3, 6), (3, 7), (3, 9), (4, 2), (4, 3), (4, 6), (4, 8), (4, 9), (5, 1),
        (5, 2), (5, 6), (5, 7), (5, 8), (6, 0), (6, 2), (6, 7), (7, 4), (7, 8), (7, 9),
        (8, 0), (8, 4), (8, 7), (9, 0), (9, 1), (9, 2), (9, 5), (9, 8),
    ),
}
TABLE_I_EPSILONS = (0.2, 0.7, 2.15)

# Four-node example: 4->1, 1->2, 3->2, 4->2, 1->3, 4->3, 2->4, 3->4 (1-based).
FIG1_EDGES: tuple[tuple[int, int], ...] = ((3, 0), (0, 1), (2, 1), (3, 1), (0, 2), (3, 2), (1, 3), (2, 3))

FIXTURES: dict[str, tuple[int, tuple[tuple[int, int], ...]]] = {
    "fig1": (4, FIG1_EDGES),
    **{name: (10, e) for name, e in TABLE_I_EDGES.items()},
}


def fixture(name: str, scheme: str = "example1") -> Digraph:
    if name not in FIXTURES:
        raise GraphError(f"unknown fixture {name!r}; expected one of {', '.join(FIXTURES)}")
    n, edges = FIXTURES[name]
    return Digraph.from_edges(n, edges, scheme=scheme)


def table_one_fixtures(scheme: str = "uniform") -> dict[str, Digraph]:
    return {name: Digraph.from_edges(10, e, scheme=scheme) for name, e in TABLE_I_EDGES.items()}


def table_one_rows(epsilons: Sequence[float] = TABLE_I_EPSILONS, w: float = 0.5) -> list[dict]:
    """Convergence factors of each fixture: uniform ``a, b`` and gossip weight ``w``, uniform ``p``."""
    rows = []
    for name, g in table_one_fixtures().items():
        ws = build_weight_system(g)
        row = {"graph": name, "edges": g.m}
        for eps in epsilons:
            row[f"lambda2_d@{eps}"] = convergence_factor(assemble_system(ws, eps))
            row[f"lambda2_g@{eps}"] = convergence_factor_gossip(gossip_system(g, eps, w=w))
        rows.append(row)
    return rows


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    lambda2_d_mean: float
    lambda2_g_mean: float | None


def _graph_factors(args) -> tuple[list[float], list[float] | None]:
    g, grid, with_gossip = args
    ws = build_weight_system(g)
    det = [convergence_factor(assemble_system(ws, e)) for e in grid]
    gos = [convergence_factor_gossip(gossip_system(g, e)) for e in grid] if with_gossip else None
    return det, gos


def sweep(
    graphs: Sequence[Digraph], grid: Sequence[float], gossip: bool = False, workers: int = 1
) -> list[SweepRow]:
    """Mean convergence factors over ``graphs`` at every ``eps`` of ``grid``.

    Graphs are processed independently (optionally in a process pool); means
    are accumulated in graph order, so the output does not depend on
    ``workers``.
    """
    if not graphs:
        raise ValueError("sweep needs at least one graph")
    if len(grid) == 0:
        raise ValueError("epsilon grid is empty")
    if gossip and max(4 * g.n * g.n for g in graphs) > DIMENSION_CAP:
        raise NumericalError(f"gossip column needs (2n)^2 <= {DIMENSION_CAP}")
    jobs = [(g, list(grid), gossip) for g in graphs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_graph_factors, jobs))
    else:
        results = [_graph_factors(j) for j in jobs]
    det = np.array([r[0] for r in results])
    gos = np.array([r[1] for r in results]) if gossip else None
    rows = []
    for k, eps in enumerate(grid):
        g_mean = float(np.mean(gos[:, k])) if gos is not None else None
        rows.append(SweepRow(float(eps), float(np.mean(det[:, k])), g_mean))
    return rows


@dataclass(frozen=True)
class BoundsRow:
    n: int
    bound_sampled: float
    bound_undirected: float
    bound_cyclic: float | None


def bounds_table(n_values: Sequence[int], samples: int = 1000, seed: int = 0) -> list[BoundsRow]:
    rows = []
    for n in n_values:
        cyc = cyclic_epsilon_bound(n)[0] if n >= 3 else None
        rows.append(BoundsRow(int(n), balanced_epsilon_bound(n, samples, seed), undirected_epsilon_bound(n), cyc))
    return rows


def fmt(x) -> str:
    """Shortest round-trip text for a number; empty for ``None``."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _write(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def trajectory_csv(res: RunResult) -> str:
    n = res.states.shape[1]
    header = ["k"] + [f"x_{i + 1}" for i in range(n)] + [f"s_{i + 1}" for i in range(n)]
    if res.edges is not None:
        header.append("edge")
    rows = []
    for r, k in enumerate(res.steps):
        row = [int(k)] + list(res.states[r]) + list(res.surpluses[r])
        if res.edges is not None:
            j, i = res.edges[r]
            row.append("" if j < 0 else f"{j + 1}->{i + 1}")
        rows.append(row)
    return _write(header, rows)


def mse_csv(curve: MSECurve) -> str:
    rows = zip(curve.k.tolist(), curve.mse_full, curve.mse_state, curve.stderr)
    return _write(["k", "mse_full", "mse_state", "stderr"], rows)


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return _write(
        ["epsilon", "lambda2_d_mean", "lambda2_g_mean"],
        [(r.epsilon, r.lambda2_d_mean, r.lambda2_g_mean) for r in rows],
    )


def bounds_csv(rows: Sequence[BoundsRow]) -> str:
    return _write(
        ["n", "bound_sampled", "bound_undirected", "bound_cyclic"],
        [(r.n, r.bound_sampled, r.bound_undirected, r.bound_cyclic) for r in rows],
    )


def table_one_csv(rows: Sequence[dict]) -> str:
    header = list(rows[0].keys())
    return _write(header, [[r[h] for h in header] for r in rows])
