"""Regenerate the CSV data behind the numerical experiments.

Writes into ``--out`` (default ``results/``):

* ``table1.csv``        convergence factors of the nested fixtures at eps 0.2 / 0.7 / 2.15
* ``bounds.csv``        balanced (sampled), undirected and cyclic eps bounds for n = 2..50
* ``paths_det_Ga.csv``  deterministic trajectory on G_a, eps = 0.7, x_a = 0
* ``paths_gossip_G*.csv`` gossip sample paths on the three fixtures, eps = 0.7
* ``mse_gossip_Gc.csv`` Monte Carlo mean-square error on G_c
* ``sweep_det_n50.csv`` mean deterministic factor over random 50-node digraphs, a = b = 1/50
* ``sweep_gossip_n20.csv`` mean gossip factor over random 20-node digraphs

    python scripts/reproduce_experiments.py --graphs 100
"""

import argparse
import pathlib
import time

from surplus_consensus import experiments as ex
from surplus_consensus.deterministic import assemble_system, run
from surplus_consensus.gossip import gossip_system, mean_square_error_curve, run_gossip
from surplus_consensus.graph import build_weight_system


def write(path: pathlib.Path, text: str):
    path.write_text(text)
    print(f"wrote {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--graphs", type=int, default=20, help="random digraphs per sweep point")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--trials", type=int, default=20000)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()

    write(out / "table1.csv", ex.table_one_csv(ex.table_one_rows()))
    write(out / "bounds.csv", ex.bounds_csv(ex.bounds_table(range(2, 51), seed=args.seed)))

    fixtures = ex.table_one_fixtures()
    x0 = ex.random_initial_state(10, args.seed)
    det = assemble_system(build_weight_system(fixtures["G_a"]), 0.7)
    write(out / "paths_det_Ga.csv", ex.trajectory_csv(run(det, x0, max_iter=20000)))
    for name, g in fixtures.items():
        res = run_gossip(gossip_system(g, 0.7), x0, max_iter=100000, seed=args.seed)
        write(out / f"paths_gossip_{name}.csv", ex.trajectory_csv(res))
    curve = mean_square_error_curve(gossip_system(fixtures["G_c"], 0.2), x0, 200, args.trials, seed=args.seed)
    write(out / "mse_gossip_Gc.csv", ex.mse_csv(curve))

    def batch(n, scheme):
        return [
            ex.random_strongly_connected(n, 0.5, ex.replicate_seed(args.seed, r), scheme=scheme)
            for r in range(args.graphs)
        ]

    grid = [round(0.02 * k, 2) for k in range(1, 56)]
    rows = ex.sweep(batch(50, "inverse-n"), grid, workers=args.workers)
    write(out / "sweep_det_n50.csv", ex.sweep_csv(rows))
    # w = 1/2 and p = 1/|E| are fixed by the gossip system; edge weights are unused
    rows = ex.sweep(batch(20, "uniform"), [round(0.05 * k, 2) for k in range(1, 41)], gossip=True, workers=args.workers)
    write(out / "sweep_gossip_n20.csv", ex.sweep_csv(rows))
    print(f"done in {time.time() - t0:.1f}s")


if __name__ == "__main__":
    main()
