"""Weighted digraphs, structural predicates and the derived weight matrices.

Node ids are 0-based in memory and 1-based in edge-list files. An edge
``(j, i)`` means information flows from ``j`` to ``i``; it carries the
updating weight ``a_ij`` (used by the receiver ``i``) and the sending weight
``b_ji`` (used by the sender ``j``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "Digraph",
    "WeightSystem",
    "WEIGHT_SCHEMES",
    "default_weights",
    "parse_digraph",
    "format_digraph",
    "read_digraph",
    "write_digraph",
    "strongly_connected_components",
    "closed_strong_components",
    "is_strongly_connected",
    "is_balanced",
    "is_symmetric",
    "is_cyclic",
    "degree",
    "build_weight_system",
    "BALANCE_TOL",
]

BALANCE_TOL = 1e-10
STOCHASTIC_TOL = 1e-12

WEIGHT_SCHEMES = ("example1", "uniform", "regular", "inverse-n")


class GraphError(ValueError):
    """Raised for malformed edge lists or weights violating the model."""


Edge = tuple[int, int]


@dataclass(frozen=True)
class Digraph:
    """Immutable weighted digraph without self-loops.

    ``edges`` is sorted lexicographically; ``a[k]`` and ``b[k]`` are the
    updating and sending weights of ``edges[k]``.
    """

    n: int
    edges: tuple[Edge, ...]
    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        if self.n < 2:
            raise GraphError(f"node count must be at least 2, got {self.n}")
        if not (len(self.edges) == len(self.a) == len(self.b)):
            raise GraphError("edges, a and b must have equal length")
        if list(self.edges) != sorted(set(self.edges)):
            raise GraphError("edges must be unique and sorted")
        for (j, i), a, b in zip(self.edges, self.a, self.b):
            if j == i:
                raise GraphError(f"self-loop at node {i + 1}")
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise GraphError(f"edge ({j + 1}, {i + 1}) references a node outside 1..{self.n}")
            for name, w in (("a", a), ("b", b)):
                if not (0.0 < w < 1.0):
                    raise GraphError(f"weight {name}={w} on edge ({j + 1}, {i + 1}) outside (0, 1)")
        in_sum = np.zeros(self.n)
        out_sum = np.zeros(self.n)
        for (j, i), a, b in zip(self.edges, self.a, self.b):
            in_sum[i] += a
            out_sum[j] += b
        for v in range(self.n):
            if in_sum[v] >= 1.0:
                raise GraphError(f"updating weights into node {v + 1} sum to {in_sum[v]} >= 1")
            if out_sum[v] >= 1.0:
                raise GraphError(f"sending weights out of node {v + 1} sum to {out_sum[v]} >= 1")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Edge],
        a: Sequence[float | None] | None = None,
        b: Sequence[float | None] | None = None,
        scheme: str = "example1",
    ) -> "Digraph":
        """Build from 0-based edges; ``None`` weights are filled from ``scheme``."""
        edges = [tuple(e) for e in edges]
        m = len(edges)
        a = list(a) if a is not None else [None] * m
        b = list(b) if b is not None else [None] * m
        if len(a) != m or len(b) != m:
            raise GraphError("weight lists must match the edge list")
        seen = set()
        for e in edges:
            if e[0] == e[1]:
                raise GraphError(f"self-loop at node {e[0] + 1}")
            if e in seen:
                raise GraphError(f"duplicate edge ({e[0] + 1}, {e[1] + 1})")
            seen.add(e)
        if any(not (0 <= v < n) for e in edges for v in e):
            raise GraphError(f"edge references a node outside 1..{n}")
        da, db = default_weights(n, edges, scheme)
        a = [da[k] if a[k] is None else float(a[k]) for k in range(m)]
        b = [db[k] if b[k] is None else float(b[k]) for k in range(m)]
        order = sorted(range(m), key=lambda k: edges[k])
        return cls(
            n=n,
            edges=tuple(edges[k] for k in order),
            a=tuple(a[k] for k in order),
            b=tuple(b[k] for k in order),
        )

    @property
    def m(self) -> int:
        return len(self.edges)

    def in_neighbors(self, i: int) -> list[int]:
        return [j for (j, t) in self.edges if t == i]

    def out_neighbors(self, j: int) -> list[int]:
        return [i for (s, i) in self.edges if s == j]

    def successors(self) -> list[list[int]]:
        out = [[] for _ in range(self.n)]
        for j, i in self.edges:
            out[j].append(i)
        return out

    def reweighted(self, scheme: str) -> "Digraph":
        return Digraph.from_edges(self.n, self.edges, scheme=scheme)


def default_weights(n: int, edges: Sequence[Edge], scheme: str) -> tuple[list[float], list[float]]:
    """Per-edge ``(a, b)`` lists for one of :data:`WEIGHT_SCHEMES`.

    * ``example1``: ``a_ij = 1/(|N_i^+|+1)``, ``b_ji = 1/(|N_j^-|+1)``
    * ``uniform``: ``a = 1/(2|E|)``, ``b = 1/|E|``
    * ``regular``: ``a = 1/(2dn)``, ``b = 1/(dn)`` with ``d`` the max in-degree
    * ``inverse-n``: ``a = b = 1/n``
    """
    m = len(edges)
    if scheme == "example1":
        indeg = [0] * n
        outdeg = [0] * n
        for j, i in edges:
            indeg[i] += 1
            outdeg[j] += 1
        return [1.0 / (indeg[i] + 1) for _, i in edges], [1.0 / (outdeg[j] + 1) for j, _ in edges]
    if scheme == "uniform":
        if m == 0:
            return [], []
        return [1.0 / (2 * m)] * m, [1.0 / m] * m
    if scheme == "regular":
        indeg = [0] * n
        for _, i in edges:
            indeg[i] += 1
        d = max(indeg) if m else 1
        return [1.0 / (2 * d * n)] * m, [1.0 / (d * n)] * m
    if scheme == "inverse-n":
        return [1.0 / n] * m, [1.0 / n] * m
    raise GraphError(f"unknown weight scheme {scheme!r}; expected one of {WEIGHT_SCHEMES}")


def _parse_weight(token: str, lineno: int) -> float:
    try:
        return float(Fraction(token))
    except (ValueError, ZeroDivisionError):
        raise GraphError(f"line {lineno}: cannot parse weight {token!r}") from None


def parse_digraph(text: str, scheme: str = "example1") -> Digraph:
    """Parse the edge-list format.

    First non-comment line holds ``n``; every following line is ``j i``,
    ``j i a_ij`` or ``j i a_ij b_ji`` with 1-based ids. ``#`` starts a comment.
    Weights may be decimals or fractions such as ``1/3``.
    """
    n = None
    edges: list[Edge] = []
    a: list[float | None] = []
    b: list[float | None] = []
    seen: dict[Edge, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 1:
                raise GraphError(f"line {lineno}: expected the node count, got {line!r}")
            try:
                n = int(tokens[0])
            except ValueError:
                raise GraphError(f"line {lineno}: node count {tokens[0]!r} is not an integer") from None
            if n < 2:
                raise GraphError(f"line {lineno}: node count must be at least 2")
            continue
        if not 2 <= len(tokens) <= 4:
            raise GraphError(f"line {lineno}: expected 'j i [a_ij [b_ji]]', got {line!r}")
        try:
            j, i = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise GraphError(f"line {lineno}: node ids must be integers, got {line!r}") from None
        if not (1 <= j <= n and 1 <= i <= n):
            raise GraphError(f"line {lineno}: node id outside 1..{n}")
        if j == i:
            raise GraphError(f"line {lineno}: self-loop at node {i}")
        e = (j - 1, i - 1)
        if e in seen:
            raise GraphError(f"line {lineno}: duplicate edge {j} {i} (first on line {seen[e]})")
        seen[e] = lineno
        edges.append(e)
        a.append(_parse_weight(tokens[2], lineno) if len(tokens) > 2 else None)
        b.append(_parse_weight(tokens[3], lineno) if len(tokens) > 3 else None)
    if n is None:
        raise GraphError("empty edge list: missing node count")
    return Digraph.from_edges(n, edges, a, b, scheme=scheme)


def format_digraph(g: Digraph) -> str:
    """Serialize with explicit weights; ``parse_digraph`` inverts it exactly."""
    lines = [str(g.n)]
    for (j, i), a, b in zip(g.edges, g.a, g.b):
        lines.append(f"{j + 1} {i + 1} {a!r} {b!r}")
    return "\n".join(lines) + "\n"


def read_digraph(path, scheme: str = "example1") -> Digraph:
    with open(path) as fh:
        return parse_digraph(fh.read(), scheme=scheme)


def write_digraph(g: Digraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_digraph(g))


def strongly_connected_components(g: Digraph) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components in reverse topological order."""
    succ = g.successors()
    index = [-1] * g.n
    low = [0] * g.n
    on_stack = [False] * g.n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(g.n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, pos = work[-1]
            if pos < len(succ[v]):
                work[-1] = (v, pos + 1)
                w = succ[v][pos]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def closed_strong_components(g: Digraph) -> list[list[int]]:
    """Strong components that no outside node can reach."""
    comps = strongly_connected_components(g)
    label = {v: c for c, comp in enumerate(comps) for v in comp}
    entered = {label[i] for j, i in g.edges if label[j] != label[i]}
    return [comp for c, comp in enumerate(comps) if c not in entered]


def is_strongly_connected(g: Digraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def is_balanced(g: Digraph, tol: float = BALANCE_TOL) -> bool:
    """Row sums of ``A`` equal its column sums, node by node."""
    in_w = np.zeros(g.n)
    out_w = np.zeros(g.n)
    for (j, i), a in zip(g.edges, g.a):
        in_w[i] += a
        out_w[j] += a
    return bool(np.all(np.abs(in_w - out_w) <= tol))


def is_symmetric(g: Digraph) -> bool:
    es = set(g.edges)
    return all((i, j) in es for j, i in g.edges)


def is_cyclic(g: Digraph) -> bool:
    """True for the ring 1->2->...->n->1 exactly (node labels matter)."""
    return set(g.edges) == {(k, (k + 1) % g.n) for k in range(g.n)} and g.m == g.n


def degree(g: Digraph) -> int:
    """Maximum in-neighbour count."""
    indeg = [0] * g.n
    for _, i in g.edges:
        indeg[i] += 1
    return max(indeg)


@dataclass(frozen=True, eq=False)
class WeightSystem:
    """Matrices derived from a digraph's weights (all ``n x n``, read-only).

    ``B`` uses the transposed convention ``B[h, i] = b_ih`` so that
    ``S = I - D_tilde + B`` is column stochastic.
    """

    graph: Digraph
    A: np.ndarray
    L: np.ndarray
    B: np.ndarray
    S: np.ndarray
    D: np.ndarray
    D_tilde: np.ndarray

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def consensus_matrix(self) -> np.ndarray:
        """``I - L``, the row-stochastic standard-consensus map."""
        return np.eye(self.n) - self.L


def _frozen(x: np.ndarray) -> np.ndarray:
    x.setflags(write=False)
    return x


def build_weight_system(g: Digraph) -> WeightSystem:
    n = g.n
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for (j, i), a, b in zip(g.edges, g.a, g.b):
        A[i, j] = a
        B[i, j] = b
    D = np.diag(A.sum(axis=1))
    D_tilde = np.diag(B.sum(axis=0))
    L = D - A
    S = np.eye(n) - D_tilde + B
    P = np.eye(n) - L
    if (
        np.max(np.abs(P.sum(axis=1) - 1.0)) > STOCHASTIC_TOL
        or np.max(np.abs(S.sum(axis=0) - 1.0)) > STOCHASTIC_TOL
        or P.min() < 0.0
        or S.min() < 0.0
    ):
        raise GraphError("weights do not yield a row-stochastic I-L and column-stochastic S")
    return WeightSystem(g, *(_frozen(x) for x in (A, L, B, S, D, D_tilde)))
