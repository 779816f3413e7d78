"""Batch front end.

Verbs: ``analyze`` (JSON report), ``run`` (trajectory CSV plus JSON summary),
``sweep`` (mean convergence factors over an epsilon grid), ``bounds``
(special-topology epsilon bounds per ``n``), ``gen`` (random digraph file)
and ``table1`` (convergence factors of the shipped nested fixtures).

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags; flags always win.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 run that neither converged nor was certified.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import experiments as ex
from .deterministic import assemble_system, certify, epsilon_bound_general, run
from .gossip import certify_gossip, gossip_system, mean_square_error_curve, run_gossip
from .graph import (
    WEIGHT_SCHEMES,
    Digraph,
    GraphError,
    build_weight_system,
    degree,
    format_digraph,
    is_balanced,
    is_cyclic,
    is_strongly_connected,
    is_symmetric,
    read_digraph,
)
from .linalg import DIMENSION_CAP, NumericalError
from .special import balanced_epsilon_bound, cyclic_epsilon_bound, undirected_epsilon_bound

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_DIVERGED = 0, 1, 2, 3
COMMANDS = ("analyze", "run", "sweep", "bounds", "gen", "table1")
GRID_MAX_POINTS = 100_000


class ConfigError(ValueError):
    """Invalid setting; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------- value parsers


def parse_random(text: str) -> tuple[int, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"expected n,p,seed, got {text!r}")
    try:
        n, p, seed = int(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"expected integer n, real p and integer seed, got {text!r}") from None
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (0.0 < p <= 1.0):
        raise ValueError("p must lie in (0, 1]")
    return n, p, seed


def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:step``, both ends included (up to rounding of the last step)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected a:b:step, got {text!r}")
    try:
        a, b, h = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"grid bounds must be numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in (a, b, h)):
        raise ValueError("grid bounds must be finite")
    if h <= 0:
        raise ValueError("step must be positive")
    if b < a:
        raise ValueError("grid end must not precede its start")
    count = int(math.floor((b - a) / h + 1e-9)) + 1
    if count > GRID_MAX_POINTS:
        raise ValueError(f"grid has {count} points; the limit is {GRID_MAX_POINTS}")
    return tuple(round(a + k * h, 12) for k in range(count))


def parse_range(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected lo:hi, got {text!r}")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"range ends must be integers, got {text!r}") from None
    if lo < 2 or hi < lo:
        raise ValueError("need 2 <= lo <= hi")
    return lo, hi


def _choice(options) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError("must be at least 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise ValueError("must be non-negative")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v >= 0):
        raise ValueError("must be a finite non-negative number")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not (math.isfinite(v) and v > 0):
        raise ValueError("must be a finite positive number")
    return v


def _mode(text: str) -> str:
    aliases = {"det": "det", "deterministic": "det", "gossip": "gossip"}
    if text not in aliases:
        raise ValueError(f"expected det or gossip, got {text!r}")
    return aliases[text]


# ---------------------------------------------------------------- configuration


@dataclass
class ExperimentConfig:
    command: str = "analyze"
    graph: str | None = None
    random: tuple[int, float, int] | None = None
    fixture: str | None = None
    eps: float | None = None
    eps_grid: tuple[float, ...] | None = None
    weights: str = "example1"
    mode: str = "det"
    tol: float = 1e-8
    max_iter: int = 100_000
    trials: int = 1000
    horizon: int = 0
    seed: int = 0
    out: str | None = None
    summary: str | None = None
    mse_out: str | None = None
    x0: str | None = None
    graphs: int = 1
    workers: int = 1
    gossip_weight: float = 0.5
    n_range: tuple[int, int] = (2, 50)
    samples: int = 1000

    def graph_sources(self) -> list[str]:
        return [f for f in ("graph", "random", "fixture") if getattr(self, f) is not None]

    def validate(self) -> "ExperimentConfig":
        sources = self.graph_sources()
        needs_graph = self.command in ("analyze", "run", "sweep", "gen")
        if needs_graph and len(sources) != 1:
            raise ConfigError("graph", f"give exactly one of --graph, --random, --fixture (got {len(sources) or 'none'})")
        if self.command == "gen" and self.random is None:
            raise ConfigError("random", "gen needs --random n,p,seed")
        if self.command == "run" and self.eps is None:
            raise ConfigError("eps", "run needs --eps")
        if self.command == "sweep":
            if self.eps_grid is None and self.eps is None:
                raise ConfigError("eps_grid", "sweep needs --eps-grid (or a single --eps)")
            if self.graphs > 1 and self.random is None:
                raise ConfigError("graphs", "several graphs need a --random source")
        if self.mode == "gossip" and self.trials < 1:
            raise ConfigError("trials", "must be at least 1 in gossip mode")
        if self.horizon > 0 and self.mode != "gossip":
            raise ConfigError("horizon", "mean-square curves need --mode gossip")
        if self.command == "run" and self.horizon > 0 and self.mse_out is None:
            raise ConfigError("mse_out", "a positive --horizon needs --mse-out for the curve")
        if not (0.0 < self.gossip_weight < 1.0):
            raise ConfigError("gossip_weight", "must lie strictly between 0 and 1")
        return self


# field name -> (string parser, help text, metavar)
FIELDS: dict[str, tuple[Callable[[str], object], str, str | None]] = {
    "graph": (str, "edge-list file", "FILE"),
    "random": (parse_random, "random strongly connected digraph", "n,p,seed"),
    "fixture": (_choice(tuple(ex.FIXTURES)), "shipped nested fixture", "NAME"),
    "eps": (_nonneg_float, "surplus gain epsilon", "X"),
    "eps_grid": (parse_grid, "epsilon grid, ends included", "a:b:step"),
    "weights": (_choice(WEIGHT_SCHEMES), "weight scheme for edges without explicit weights", None),
    "mode": (_mode, "det or gossip", None),
    "tol": (_positive_float, "convergence tolerance (max-norm)", "X"),
    "max_iter": (_positive_int, "iteration budget", "K"),
    "trials": (_positive_int, "Monte Carlo trials", "R"),
    "horizon": (_nonneg_int, "mean-square horizon (gossip)", "K"),
    "seed": (int, "master seed", "S"),
    "out": (str, "main output path (stdout if omitted)", "PATH"),
    "summary": (str, "run summary JSON path (stdout if omitted)", "PATH"),
    "mse_out": (str, "mean-square curve CSV path", "PATH"),
    "x0": (str, "initial state file (whitespace separated)", "FILE"),
    "graphs": (_positive_int, "random digraphs averaged by sweep", "R"),
    "workers": (_positive_int, "worker processes for sweep", "W"),
    "gossip_weight": (_positive_float, "gossip weight w", "W"),
    "n_range": (parse_range, "node counts for bounds", "lo:hi"),
    "samples": (_positive_int, "disc samples for the balanced bound", "N"),
}


def read_config_file(path: str) -> dict[str, object]:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys act as underscores."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in FIELDS:
            raise ConfigError(key, f"{path}:{lineno}: unknown key")
        try:
            values[key] = FIELDS[key][0](value)
        except ValueError as exc:
            raise ConfigError(key, f"{path}:{lineno}: {exc}") from None
    return values


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit code 1 for usage errors
        raise UsageError(message)


def _typed(name: str, fn: Callable[[str], object]):
    def convert(text: str):
        try:
            return fn(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = name
    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surplus-consensus", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="FILE", help="key = value settings file; flags override it")
    for name, (fn, help_text, metavar) in FIELDS.items():
        parser.add_argument(
            "--" + name.replace("_", "-"),
            dest=name,
            type=_typed(name, fn),
            default=None,
            help=help_text,
            metavar=metavar,
        )
    return parser


def load_config(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values: dict[str, object] = {}
    if args.config:
        values.update(read_config_file(args.config))
    for name in FIELDS:
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    cfg = ExperimentConfig(command=args.command)
    cfg = dataclasses.replace(cfg, **values)
    return cfg.validate()


# ---------------------------------------------------------------- commands


def load_graph(cfg: ExperimentConfig) -> Digraph:
    if cfg.graph is not None:
        try:
            return read_digraph(cfg.graph, scheme=cfg.weights)
        except OSError as exc:
            raise ConfigError("graph", f"cannot read {cfg.graph}: {exc.strerror}") from None
    if cfg.random is not None:
        n, p, seed = cfg.random
        return ex.random_strongly_connected(n, p, seed, scheme=cfg.weights)
    return ex.fixture(cfg.fixture, scheme=cfg.weights)


def load_x0(cfg: ExperimentConfig, n: int) -> np.ndarray:
    if cfg.x0 is None:
        return ex.random_initial_state(n, cfg.seed)
    try:
        with open(cfg.x0) as fh:
            tokens = fh.read().split()
    except OSError as exc:
        raise ConfigError("x0", f"cannot read {cfg.x0}: {exc.strerror}") from None
    try:
        x0 = np.array([float(t) for t in tokens])
    except ValueError:
        raise ConfigError("x0", "entries must be numbers") from None
    if x0.shape != (n,):
        raise ConfigError("x0", f"expected {n} values, got {x0.size}")
    if not np.all(np.isfinite(x0)):
        raise ConfigError("x0", "entries must be finite")
    return x0


def _emit(text: str, path: str | None, stdout) -> None:
    if path is None:
        stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError("out", f"cannot write {path}: {exc.strerror}") from None


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _gossip_fits(n: int) -> bool:
    return (2 * n) ** 2 <= DIMENSION_CAP


def analyze_report(cfg: ExperimentConfig, g: Digraph) -> dict:
    ws = build_weight_system(g)
    sc = is_strongly_connected(g)
    report: dict = {
        "n": g.n,
        "edges": g.m,
        "weights": cfg.weights,
        "strongly_connected": sc,
        "balanced": is_balanced(g),
        "degree": degree(g),
        "cyclic": is_cyclic(g),
        "symmetric": is_symmetric(g),
    }
    omitted: dict[str, str] = {}
    if sc:
        try:
            bound = epsilon_bound_general(ws)
            report["lambda3_modulus"] = bound.lambda3_modulus
            report["epsilon_bound"] = bound.value
            report["log_epsilon_bound"] = bound.log_value
        except NumericalError as exc:
            omitted["epsilon_bound"] = str(exc)
    else:
        omitted["epsilon_bound"] = "digraph is not strongly connected"
    if cfg.eps is not None:
        report["epsilon"] = cfg.eps
        cert = certify(assemble_system(ws, cfg.eps))
        report["lambda2_d"] = cert.lambda2
        report["unit_eigenvalue_simple_d"] = cert.unit_simple
        report["certified_d"] = cert.certified
        if _gossip_fits(g.n):
            gc = certify_gossip(gossip_system(g, cfg.eps, w=cfg.gossip_weight))
            report["lambda2_g"] = gc.lambda2
            report["unit_eigenvalue_simple_g"] = gc.unit_simple
            report["certified_g"] = gc.certified
        else:
            omitted["lambda2_g"] = f"E[M (x) M] has dimension {(2 * g.n) ** 2} > cap {DIMENSION_CAP}"
    if sc:
        special: dict = {}
        if report["cyclic"]:
            b, lam3 = cyclic_epsilon_bound(g.n) if g.n >= 3 else (None, None)
            if b is not None:
                special["cyclic"] = {"epsilon_bound": b, "lambda3_modulus": lam3, "assumes_weights": "regular"}
        if report["symmetric"]:
            special["undirected"] = {"epsilon_bound": undirected_epsilon_bound(g.n), "assumes_weights": "regular"}
        if report["balanced"] and cfg.weights == "regular":
            special["balanced"] = {
                "sampled_epsilon_bound": balanced_epsilon_bound(g.n, cfg.samples, cfg.seed),
                "samples": cfg.samples,
            }
        if special:
            report["special"] = special
    else:
        omitted["special"] = "digraph is not strongly connected"
    if omitted:
        report["omitted"] = omitted
    return report


def cmd_analyze(cfg: ExperimentConfig, stdout) -> int:
    _emit(_json(analyze_report(cfg, load_graph(cfg))), cfg.out, stdout)
    return EXIT_OK


def cmd_run(cfg: ExperimentConfig, stdout) -> int:
    g = load_graph(cfg)
    x0 = load_x0(cfg, g.n)
    certified = None
    if cfg.mode == "det":
        sys_ = assemble_system(build_weight_system(g), cfg.eps)
        cert = certify(sys_)
        certified = cert.certified
        res = run(sys_, x0, max_iter=cfg.max_iter, tol=cfg.tol)
    else:
        sys_ = gossip_system(g, cfg.eps, w=cfg.gossip_weight)
        cert = certify_gossip(sys_) if _gossip_fits(g.n) else None
        certified = None if cert is None else cert.certified
        res = run_gossip(sys_, x0, max_iter=cfg.max_iter, tol=cfg.tol, seed=cfg.seed)
    res.lambda2 = None if cert is None else cert.lambda2
    summary = {"mode": cfg.mode, "n": g.n, "edges": g.m, **res.summary(), "certified": certified}
    summary["final_error"] = float(max(np.max(np.abs(res.x - res.x_avg)), np.max(np.abs(res.s))))
    if cfg.out is not None:
        _emit(ex.trajectory_csv(res), cfg.out, stdout)
    if cfg.mode == "gossip" and cfg.horizon > 0:
        curve = mean_square_error_curve(sys_, x0, cfg.horizon, cfg.trials, seed=cfg.seed)
        _emit(ex.mse_csv(curve), cfg.mse_out, stdout)
    _emit(_json(summary), cfg.summary, stdout)
    if res.verdict == "diverged" or (res.verdict == "timeout" and certified is False):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, stdout) -> int:
    grid = cfg.eps_grid if cfg.eps_grid is not None else (cfg.eps,)
    if cfg.random is not None:
        n, p, seed = cfg.random
        graphs = [
            ex.random_strongly_connected(n, p, ex.replicate_seed(seed, r), scheme=cfg.weights)
            for r in range(cfg.graphs)
        ]
    else:
        graphs = [load_graph(cfg)]
    rows = ex.sweep(graphs, grid, gossip=cfg.mode == "gossip", workers=cfg.workers)
    _emit(ex.sweep_csv(rows), cfg.out, stdout)
    return EXIT_OK


def cmd_bounds(cfg: ExperimentConfig, stdout) -> int:
    lo, hi = cfg.n_range
    rows = ex.bounds_table(range(lo, hi + 1), cfg.samples, cfg.seed)
    _emit(ex.bounds_csv(rows), cfg.out, stdout)
    return EXIT_OK


def cmd_gen(cfg: ExperimentConfig, stdout) -> int:
    _emit(format_digraph(load_graph(cfg)), cfg.out, stdout)
    return EXIT_OK


def cmd_table1(cfg: ExperimentConfig, stdout) -> int:
    eps = cfg.eps_grid if cfg.eps_grid is not None else ex.TABLE_I_EPSILONS
    _emit(ex.table_one_csv(ex.table_one_rows(eps, w=cfg.gossip_weight)), cfg.out, stdout)
    return EXIT_OK


HANDLERS = {
    "analyze": cmd_analyze,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "bounds": cmd_bounds,
    "gen": cmd_gen,
    "table1": cmd_table1,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg = load_config(sys.argv[1:] if argv is None else argv)
        return HANDLERS[cfg.command](cfg, stdout)
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_USAGE
    except GraphError as exc:
        stderr.write(f"graph error: {exc}\n")
        return EXIT_USAGE
    except NumericalError as exc:
        stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
