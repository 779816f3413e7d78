"""Asynchronous surplus-based gossip.

At every tick one edge ``(j, i)`` is drawn with probability ``p_ij``. The
receiver ``i`` updates

    x_i' = x_i + w_ij (x_j - x_i) + eps w_ij s_i
    s_i' = s_i + s_j - (x_i' - x_i)

the sender keeps its state and empties its surplus (``s_j' = 0``), and all
other nodes are untouched. Mean-square behaviour is governed by
``E[M (x) M]``, the probability-weighted sum of Kronecker squares of the
per-edge update matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deterministic import AugmentedState, Certificate, RunResult, _blowup_threshold, _factor, _Recorder
from .graph import Digraph
from .linalg import DIMENSION_CAP, NumericalError, eigenvalues
from .rng import stream

__all__ = [
    "GossipSchedule",
    "GossipSystem",
    "MSECurve",
    "uniform_schedule",
    "gossip_system",
    "assemble_edge_matrix",
    "edge_update_entries",
    "sample_edge",
    "sample_edge_indices",
    "gossip_step",
    "run_gossip",
    "expected_kronecker",
    "expected_kronecker_naive",
    "expectation_blocks",
    "certify_gossip",
    "convergence_factor_gossip",
    "mean_square_error_curve",
    "exact_mean_square_curve",
    "MC_BLOCK",
]

PROB_TOL = 1e-12
MC_BLOCK = 1024

Edge = tuple[int, int]


@dataclass(frozen=True, eq=False)
class GossipSchedule:
    edges: tuple[Edge, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (len(self.edges),):
            raise ValueError("one probability per edge is required")
        if len(self.edges) == 0:
            raise ValueError("a schedule needs at least one edge")
        if np.any(p <= 0.0) or np.any(p > 1.0):
            raise ValueError("edge probabilities must lie in (0, 1]")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"edge probabilities sum to {p.sum()}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    def index(self, edge: Edge) -> int:
        try:
            return self.edges.index(tuple(edge))
        except ValueError:
            raise ValueError(f"edge {edge} is not in the schedule") from None


def uniform_schedule(g: Digraph) -> GossipSchedule:
    return GossipSchedule(g.edges, np.full(g.m, 1.0 / g.m))


@dataclass(frozen=True, eq=False)
class GossipSystem:
    graph: Digraph
    epsilon: float
    w: np.ndarray  # updating weight per edge, aligned with graph.edges
    schedule: GossipSchedule

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dim(self) -> int:
        return 2 * self.graph.n


def gossip_system(g: Digraph, epsilon: float, w=None, probabilities=None) -> GossipSystem:
    """Defaults: ``w_ij = 1/2`` and uniform activation ``p = 1/|E|``; a scalar ``w`` applies to every edge."""
    if not (epsilon >= 0.0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be a finite non-negative number, got {epsilon}")
    if g.m == 0:
        raise ValueError("gossip needs at least one edge")
    w = np.full(g.m, 0.5) if w is None else np.asarray(w, dtype=float)
    if w.ndim == 0:
        w = np.full(g.m, float(w))
    if w.shape != (g.m,) or np.any(w <= 0.0) or np.any(w >= 1.0):
        raise ValueError("gossip weights must be one value in (0, 1) per edge")
    w.setflags(write=False)
    sched = uniform_schedule(g) if probabilities is None else GossipSchedule(g.edges, probabilities)
    return GossipSystem(g, float(epsilon), w, sched)


def edge_update_entries(sys: GossipSystem, k: int):
    """Nonzeros ``(rows, cols, vals)`` of ``M_ji - I`` for edge index ``k``."""
    n, eps, w = sys.n, sys.epsilon, float(sys.w[k])
    j, i = sys.graph.edges[k]
    rows = np.array([i, i, i, n + i, n + i, n + i, n + i, n + j])
    cols = np.array([i, j, n + i, i, j, n + i, n + j, n + j])
    vals = np.array([-w, w, eps * w, w, -w, -eps * w, 1.0, -1.0])
    return rows, cols, vals


def assemble_edge_matrix(sys: GossipSystem, edge: Edge) -> np.ndarray:
    """Dense ``M_ji = [[I - L_ji, eps D_ji], [L_ji, S_ji - eps D_ji]]``."""
    k = sys.schedule.index(edge)
    n, eps, w = sys.n, sys.epsilon, float(sys.w[k])
    j, i = edge
    f = np.eye(n)
    A = w * np.outer(f[i], f[j])
    D = w * np.outer(f[i], f[i])
    L = D - A
    S = np.eye(n) - np.outer(f[j] - f[i], f[j])
    return np.block([[np.eye(n) - L, eps * D], [L, S - eps * D]])


def sample_edge_indices(sched: GossipSchedule, rng: np.random.Generator, size=None):
    return np.searchsorted(sched._cdf, rng.random(size), side="right").clip(max=len(sched.edges) - 1)


def sample_edge(sched: GossipSchedule, rng: np.random.Generator) -> Edge:
    return sched.edges[int(sample_edge_indices(sched, rng))]


def gossip_step(sys: GossipSystem, st: AugmentedState, edge: Edge) -> AugmentedState:
    n = sys.n
    x, s = np.array(st.x, dtype=float), np.array(st.s, dtype=float)
    if x.shape != (n,) or s.shape != (n,):
        raise ValueError(f"state vectors must have length {n}")
    k = sys.schedule.index(edge)
    j, i = edge
    w = float(sys.w[k])
    dx = w * (x[j] - x[i]) + sys.epsilon * w * s[i]
    x[i] += dx
    s[i] = s[i] + s[j] - dx
    s[j] = 0.0
    return AugmentedState(x, s, st.k + 1)


def _rng_for(seed, *tags) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, *tags)


def run_gossip(sys: GossipSystem, x0, max_iter: int = 100_000, tol: float = 1e-8, seed=0) -> RunResult:
    """One sample path; verdicts as in :func:`deterministic.run`."""
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    n = sys.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have length {n}")
    rng = _rng_for(seed, "gossip-path")
    x_avg = float(np.mean(x0))
    target = np.concatenate([np.full(n, x_avg), np.zeros(n)])
    limit = _blowup_threshold(x0)
    z = np.concatenate([x0, np.zeros(n)])
    src = np.array([e[0] for e in sys.graph.edges])
    dst = np.array([e[1] for e in sys.graph.edges])
    w, eps = sys.w, sys.epsilon
    rec = _Recorder(n, max_iter, with_edges=True)
    rec.add(0, z)
    verdict, k = "timeout", 0
    draws = np.empty(0, dtype=int)
    while True:
        err = np.max(np.abs(z - target))
        if err < tol:
            verdict = "converged"
            break
        if not np.isfinite(err) or np.max(np.abs(z)) > limit:
            verdict = "diverged"
            break
        if k >= max_iter:
            break
        if k % 4096 == 0:
            draws = sample_edge_indices(sys.schedule, rng, 4096)
        e = draws[k % 4096]
        j, i, we = src[e], dst[e], w[e]
        dx = we * (z[j] - z[i]) + eps * we * z[n + i]
        z[i] += dx
        z[n + i] = z[n + i] + z[n + j] - dx
        z[n + j] = 0.0
        k += 1
        rec.add(k, z, edge=(int(j), int(i)))
    rec.add(k, z, force=True)
    steps, X, S, edges = rec.arrays()
    return RunResult(verdict, k, x_avg, eps, z[:n].copy(), z[n:].copy(), steps, X, S, edges)


def _check_cap(sys: GossipSystem) -> int:
    N = sys.dim
    if N * N > DIMENSION_CAP:
        raise NumericalError(f"E[M (x) M] would be {N * N}x{N * N}, above the cap {DIMENSION_CAP}")
    return N


def expected_kronecker(sys: GossipSystem) -> np.ndarray:
    """``sum_e p_e M_e (x) M_e`` assembled from the few nonzeros of ``M_e - I``.

    With ``R_e = M_e - I``: ``E = I + Rbar (x) I + I (x) Rbar + sum_e p_e R_e (x) R_e``.
    """
    N = _check_cap(sys)
    NN = N * N
    E = np.eye(NN)
    Rbar = np.zeros((N, N))
    t = np.arange(N)
    for k, p in enumerate(sys.schedule.probabilities):
        r, c, v = edge_update_entries(sys, k)
        np.add.at(Rbar, (r, c), p * v)
        # R (x) R: entry (r1 N + r2, c1 N + c2) = v1 v2
        rr = (r[:, None] * N + r[None, :]).ravel()
        cc = (c[:, None] * N + c[None, :]).ravel()
        np.add.at(E, (rr, cc), p * np.outer(v, v).ravel())
    r, c = np.nonzero(Rbar)
    v = Rbar[r, c]
    # Rbar (x) I and I (x) Rbar
    np.add.at(E, ((r[:, None] * N + t).ravel(), (c[:, None] * N + t).ravel()), np.repeat(v, N))
    np.add.at(E, ((t[:, None] * N + r).ravel(), (t[:, None] * N + c).ravel()), np.tile(v, N))
    return E


def expected_kronecker_naive(sys: GossipSystem) -> np.ndarray:
    """Dense reference: ``sum_e p_e kron(M_e, M_e)``."""
    N = _check_cap(sys)
    E = np.zeros((N * N, N * N))
    for e, p in zip(sys.schedule.edges, sys.schedule.probabilities):
        Me = assemble_edge_matrix(sys, e)
        E += p * np.kron(Me, Me)
    return E


def expectation_blocks(sys: GossipSystem) -> dict[str, np.ndarray]:
    """``E[P (x) Q]`` for ``P, Q`` in ``{I - L_e, S_e}``, keyed ``"PP"``, ``"PS"``, ``"SP"``, ``"SS"``."""
    n = sys.n
    out = {key: np.zeros((n * n, n * n)) for key in ("PP", "PS", "SP", "SS")}
    for e, p in zip(sys.schedule.edges, sys.schedule.probabilities):
        Me = assemble_edge_matrix(sys, e)
        P, S = Me[:n, :n], Me[n:, n:] + Me[:n, n:]  # S_e - eps D_e + eps D_e
        out["PP"] += p * np.kron(P, P)
        out["PS"] += p * np.kron(P, S)
        out["SP"] += p * np.kron(S, P)
        out["SS"] += p * np.kron(S, S)
    return out


def certify_gossip(sys: GossipSystem) -> Certificate:
    spec = eigenvalues(expected_kronecker(sys))
    return Certificate(spec, _factor(spec))


def convergence_factor_gossip(sys: GossipSystem) -> float:
    """Dominant modulus of ``E[M (x) M]`` other than its eigenvalue 1."""
    return _factor(eigenvalues(expected_kronecker(sys), check_rank=False))


@dataclass
class MSECurve:
    k: np.ndarray
    mse_full: np.ndarray  # E ||[x - x_a 1; s]||^2
    mse_state: np.ndarray  # E ||x - x_a 1||^2
    stderr: np.ndarray  # standard error of mse_full
    trials: int


def mean_square_error_curve(sys: GossipSystem, x0, horizon: int, trials: int, seed=0) -> MSECurve:
    """Monte Carlo estimate of the squared consensus error for ``k = 0..horizon``.

    Trials are simulated in blocks of :data:`MC_BLOCK`; block ``b`` draws from
    its own stream, so trial ``t`` is reproducible from ``(seed, t)`` alone.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    n = sys.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have length {n}")
    x_avg = float(np.mean(x0))
    target = np.concatenate([np.full(n, x_avg), np.zeros(n)])
    src = np.array([e[0] for e in sys.graph.edges])
    dst = np.array([e[1] for e in sys.graph.edges])
    w, eps = sys.w, sys.epsilon
    s1 = np.zeros(horizon + 1)
    s2 = np.zeros(horizon + 1)
    st = np.zeros(horizon + 1)
    done = 0
    for block in range(math.ceil(trials / MC_BLOCK)):
        rng = stream(seed, "mse", block) if not isinstance(seed, np.random.Generator) else seed
        draws = sample_edge_indices(sys.schedule, rng, (MC_BLOCK, horizon))
        size = min(MC_BLOCK, trials - done)
        draws = draws[:size]
        Z = np.tile(np.concatenate([x0, np.zeros(n)]), (size, 1))
        rows = np.arange(size)
        for k in range(horizon + 1):
            err = Z - target
            full = np.einsum("ij,ij->i", err, err)
            s1[k] += full.sum()
            s2[k] += (full * full).sum()
            st[k] += np.einsum("ij,ij->i", err[:, :n], err[:, :n]).sum()
            if k == horizon:
                break
            e = draws[:, k]
            j, i, we = src[e], dst[e], w[e]
            si, sj = Z[rows, n + i], Z[rows, n + j]
            dx = we * (Z[rows, j] - Z[rows, i]) + eps * we * si
            Z[rows, i] += dx
            Z[rows, n + i] = si + sj - dx
            Z[rows, n + j] = 0.0
        done += size
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean * mean, 0.0)
    se = np.sqrt(var / max(trials - 1, 1))
    return MSECurve(np.arange(horizon + 1), mean, st / trials, se, trials)


def exact_mean_square_curve(sys: GossipSystem, x0, horizon: int) -> MSECurve:
    """``E ||e(k)||^2`` from ``E[vec(e e^T)](k) = E[M (x) M]^k vec(e(0) e(0)^T)``."""
    n, N = sys.n, sys.dim
    x0 = np.asarray(x0, dtype=float)
    e0 = np.concatenate([x0 - np.mean(x0), np.zeros(n)])
    E = expected_kronecker(sys)
    v = np.outer(e0, e0).ravel(order="F")
    diag = np.arange(N) * (N + 1)
    full, state = [], []
    for k in range(horizon + 1):
        full.append(v[diag].sum())
        state.append(v[diag[:n]].sum())
        if k < horizon:
            v = E @ v
    return MSECurve(np.arange(horizon + 1), np.array(full), np.array(state), np.zeros(horizon + 1), 0)
