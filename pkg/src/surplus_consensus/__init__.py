"""Surplus-based average consensus on strongly connected digraphs.

A deterministic iteration and a randomized gossip iteration that reach the
exact average on non-balanced digraphs, together with the spectral tools
that certify and measure their convergence.
"""

from .deterministic import (
    AugmentedState,
    assemble_system,
    certify,
    convergence_factor,
    epsilon_bound_general,
    run,
)
from .gossip import (
    certify_gossip,
    convergence_factor_gossip,
    expected_kronecker,
    gossip_system,
    run_gossip,
)
from .graph import Digraph, GraphError, build_weight_system, parse_digraph
from .linalg import NumericalError

__version__ = "0.1.0"

__all__ = [
    "AugmentedState",
    "Digraph",
    "GraphError",
    "NumericalError",
    "assemble_system",
    "build_weight_system",
    "certify",
    "certify_gossip",
    "convergence_factor",
    "convergence_factor_gossip",
    "epsilon_bound_general",
    "expected_kronecker",
    "gossip_system",
    "parse_digraph",
    "run",
    "run_gossip",
]
