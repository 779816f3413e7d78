"""Search for nested 10-node digraphs with 17 / 29 / 38 edges.

Requirements: G_a < G_b < G_c as edge sets, each strongly connected, no node
with equal in- and out-degree; at eps = 0.2 both convergence factors
(uniform weights for the deterministic iteration, w = 1/2 and uniform
activation for gossip) strictly decrease from G_a to G_c; and for each
factor some eps makes G_a unstable while G_c stays stable.

Each level starts from a random Hamiltonian ring (so strong connectivity is
automatic) and keeps, among ``--candidates`` random supersets, the one with
the largest decrease of the smaller of the two factor gaps.

    python scripts/find_table1_fixtures.py --seed 25
"""

import argparse

import numpy as np

from surplus_consensus.deterministic import assemble_system, convergence_factor
from surplus_consensus.gossip import convergence_factor_gossip, gossip_system
from surplus_consensus.graph import Digraph, build_weight_system, is_strongly_connected

N = 10
SIZES = (17, 29, 38)
EPS = 0.2
INSTABILITY_GRID = [round(0.05 * k, 2) for k in range(2, 61)]


def all_unbalanced(edges):
    ind = np.zeros(N, int)
    out = np.zeros(N, int)
    for j, i in edges:
        ind[i] += 1
        out[j] += 1
    return bool(np.all(ind != out))


def grow(rng, base, target, tries=2000):
    pairs = [(j, i) for j in range(N) for i in range(N) if i != j]
    for _ in range(tries):
        cand = [e for e in pairs if e not in base]
        pick = rng.choice(len(cand), target - len(base), replace=False)
        edges = set(base) | {cand[k] for k in pick}
        if all_unbalanced(edges):
            return edges
    return None


def factors(edges, eps):
    g = Digraph.from_edges(N, sorted(edges), scheme="uniform")
    det = convergence_factor(assemble_system(build_weight_system(g), eps))
    gos = convergence_factor_gossip(gossip_system(g, eps))
    return det, gos


def best_superset(rng, base, target, base_f, candidates):
    best = None
    for _ in range(candidates):
        edges = grow(rng, base, target)
        if edges is None:
            continue
        f = factors(edges, EPS)
        margin = min(base_f[0] - f[0], base_f[1] - f[1])
        if margin > 0 and (best is None or margin > best[0]):
            best = (margin, edges, f)
    return best


def search(seed, candidates):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(N)
    ring = {(int(perm[k]), int(perm[(k + 1) % N])) for k in range(N)}
    ga = grow(rng, ring, SIZES[0])
    if ga is None:
        return None
    fa = factors(ga, EPS)
    b = best_superset(rng, ga, SIZES[1], fa, candidates)
    if b is None:
        return None
    c = best_superset(rng, b[1], SIZES[2], b[2], candidates)
    if c is None:
        return None
    gb, gc = b[1], c[1]
    det_ok = gos_ok = False
    for eps in INSTABILITY_GRID:
        a_f, c_f = factors(ga, eps), factors(gc, eps)
        det_ok |= a_f[0] > 1 > c_f[0]
        gos_ok |= a_f[1] > 1 > c_f[1]
    if not (det_ok and gos_ok):
        return None
    graphs = [sorted(g) for g in (ga, gb, gc)]
    assert all(is_strongly_connected(Digraph.from_edges(N, g)) for g in graphs)
    return graphs


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seed", type=int, default=25)
    ap.add_argument("--tries", type=int, default=1, help="consecutive seeds to try")
    ap.add_argument("--candidates", type=int, default=40)
    args = ap.parse_args()
    for seed in range(args.seed, args.seed + args.tries):
        graphs = search(seed, args.candidates)
        if graphs is None:
            print(f"seed {seed}: no admissible triple")
            continue
        print(f"# seed {seed}")
        for name, g in zip(("G_a", "G_b", "G_c"), graphs):
            print(f"{name} = {tuple(g)}")
        return
    raise SystemExit(1)


if __name__ == "__main__":
    main()
