"""Printed matrices of the four-node example, as exact rationals.

Each matrix is ``C + eps * E`` for constant parts ``C`` and ``E``.
"""

from fractions import Fraction as Fr

import numpy as np

h, q, t = Fr(1, 2), Fr(1, 4), Fr(1, 3)

EXAMPLE1_CONST = [
    [h, 0, 0, h, 0, 0, 0, 0],
    [q, q, q, q, 0, 0, 0, 0],
    [t, 0, t, t, 0, 0, 0, 0],
    [0, t, t, t, 0, 0, 0, 0],
    [h, 0, 0, -h, t, 0, 0, q],
    [-q, 3 * q, -q, -q, t, h, t, q],
    [-t, 0, 2 * t, -t, t, 0, t, q],
    [0, -t, -t, 2 * t, 0, h, t, q],
]
EXAMPLE1_EPS = [[0] * 8 for _ in range(8)]
for _k in range(4):
    EXAMPLE1_EPS[_k][4 + _k] = 1
    EXAMPLE1_EPS[4 + _k][4 + _k] = -1

# edge 3 -> 2 (1-based) with w = 1/2
EXAMPLE2_CONST = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, h, h, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, h, -h, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
]
EXAMPLE2_EPS = [[0] * 8 for _ in range(8)]
EXAMPLE2_EPS[1][5] = h
EXAMPLE2_EPS[5][5] = -h


def evaluate(const, eps_part, eps):
    """Exact rational evaluation at a rational ``eps`` (a ``Fraction``), then one rounding."""
    eps = Fr(eps)
    return np.array([[float(Fr(c) + eps * Fr(e)) for c, e in zip(rc, re)] for rc, re in zip(const, eps_part)])
