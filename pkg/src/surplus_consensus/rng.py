"""Reproducible random streams.

A master seed and a tuple of purpose tags are hashed (SHA-256) into a
64-bit sub-seed, so every consumer owns an independent stream and adding a
new consumer never perturbs an existing one.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "stream"]


def derive_seed(master: int, *tags) -> int:
    payload = "\x1f".join([str(int(master))] + [str(t) for t in tags]).encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def stream(master: int, *tags) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, *tags)))
