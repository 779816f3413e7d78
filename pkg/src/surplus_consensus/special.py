"""Epsilon bounds for balanced, undirected and cyclic digraphs.

With weights ``a = 1/(2dn)`` and ``b = 1/(dn)`` a balanced digraph has
``S = I - 2L`` and every pair of eigenvalues of ``M`` solves

    (lam - 1)(lam - 1 + eps) + 3 (lam - 1) mu + 2 mu^2 = 0

for an eigenvalue ``mu`` of ``L``. Stability of that quadratic is decided
by the complex Jury (Schur-Cohn) test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import stream

__all__ = [
    "QuadraticPoly",
    "balanced_poly",
    "jury_coefficients",
    "jury_stable",
    "bilinear_transform",
    "sample_disc",
    "sampled_stability_bound",
    "balanced_epsilon_bound",
    "undirected_epsilon_bound",
    "cyclic_lambda3",
    "cyclic_epsilon_bound",
    "bauer_fike_radius",
    "BAUER_FIKE_CONSTANT",
]

BAUER_FIKE_CONSTANT = (3.0 + math.sqrt(5.0)) / 2.0 * math.sqrt(2.0)
MU_EXCLUDE = 1e-12


@dataclass(frozen=True)
class QuadraticPoly:
    """Monic quadratic ``lam^2 + alpha1 lam + alpha0``."""

    alpha0: complex
    alpha1: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha0) and np.isfinite(self.alpha1)):
            raise ValueError("polynomial coefficients must be finite")

    def roots(self) -> np.ndarray:
        return np.roots([1.0, self.alpha1, self.alpha0]).astype(complex)

    def __call__(self, lam):
        return lam * lam + self.alpha1 * lam + self.alpha0


def balanced_poly(mu: complex, epsilon: float) -> QuadraticPoly:
    return QuadraticPoly(2 * mu * mu - 3 * mu - epsilon + 1, 3 * mu + epsilon - 2)


def jury_coefficients(alpha0, alpha1):
    """``(beta0, beta1)`` as real expressions; works elementwise on arrays.

    ``beta0 = 1 - |a0|^2`` and ``beta1 = beta0^2 - |a1 - conj(a1) a0|^2``,
    the expanded form of the nested 2x2 determinants.
    """
    a0 = np.asarray(alpha0, dtype=complex)
    a1 = np.asarray(alpha1, dtype=complex)
    beta0 = 1.0 - (a0.real**2 + a0.imag**2)
    c = a1 - np.conj(a1) * a0
    beta1 = beta0 * beta0 - (c.real**2 + c.imag**2)
    return beta0, beta1


def jury_stable(p: QuadraticPoly) -> bool:
    """True iff both roots lie strictly inside the unit circle."""
    beta0, beta1 = jury_coefficients(p.alpha0, p.alpha1)
    return bool(beta0 > 0 and beta1 > 0)


def bilinear_transform(p: QuadraticPoly) -> np.ndarray:
    """Coefficients (highest first) of ``(g - 1)^2 p((g + 1)/(g - 1))``."""
    a0, a1 = p.alpha0, p.alpha1
    return np.array([1 + a0 + a1, 2 - 2 * a0, 1 + a0 - a1], dtype=complex)


def sample_disc(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Points of ``|mu - 1/(2n)| <= 1/(2n)`` without ``mu = 0``; half on the boundary."""
    r = 1.0 / (2 * n)
    out = np.empty(0, dtype=complex)
    while out.size < samples:
        k = samples - out.size
        theta = rng.uniform(0.0, 2 * math.pi, k)
        radius = np.where(np.arange(k) % 2 == 0, r, r * np.sqrt(rng.uniform(0.0, 1.0, k)))
        mu = r + radius * np.exp(1j * theta)
        out = np.concatenate([out, mu[np.abs(mu) >= MU_EXCLUDE]])
    return out[:samples]


def _all_stable(mu: np.ndarray, epsilon: float) -> bool:
    beta0, beta1 = jury_coefficients(2 * mu * mu - 3 * mu - epsilon + 1, 3 * mu + epsilon - 2)
    return bool(np.all(beta0 > 0) and np.all(beta1 > 0))


def sampled_stability_bound(mu, rtol: float = 1e-3, probe: float = 1e-9) -> float:
    """Largest ``eps`` in ``(0, 2)`` for which every ``mu`` gives a stable quadratic.

    Bisection to relative width ``rtol``, returning the lower bracket; ``0.0``
    when even ``eps = probe`` fails.
    """
    mu = np.asarray(mu, dtype=complex).ravel()
    if not _all_stable(mu, probe):
        return 0.0
    lo, hi = probe, 2.0
    if _all_stable(mu, hi):
        return hi
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if _all_stable(mu, mid):
            lo = mid
        else:
            hi = mid
    return lo


def balanced_epsilon_bound(n: int, samples: int = 1000, seed: int = 0, rtol: float = 1e-3) -> float:
    """Sampled bound over the disc ``|mu - 1/(2n)| <= 1/(2n)``.

    Sampled points near ``mu = 0`` on the boundary circle dominate: there the
    admissible ``eps`` shrinks to zero, so the result is small and varies
    with the draw rather than increasing in ``n``.
    """
    if n < 2 or samples < 1:
        raise ValueError("need n >= 2 and samples >= 1")
    mu = sample_disc(n, samples, stream(seed, "balanced-bound", n))
    return sampled_stability_bound(mu, rtol)


def undirected_epsilon_bound(n: int) -> float:
    if n < 2:
        raise ValueError("n must be at least 2")
    return (1.0 - 1.0 / n) * (2.0 - 1.0 / n)


def cyclic_lambda3(n: int) -> float:
    """Closed-form third eigenvalue modulus of ``M0`` on the ring of ``n`` nodes."""
    if n < 3:
        raise ValueError("the cyclic bound needs n >= 3")
    return math.sqrt(1 - 1 / n + 1 / (2 * n * n) + (1 / n) * (1 - 1 / (2 * n)) * math.cos(2 * math.pi / n))


def cyclic_epsilon_bound(n: int) -> tuple[float, float]:
    """``(bound, |lambda_3|)`` with ``bound = sqrt(2)/(3 + sqrt(5)) (1 - |lambda_3|)``."""
    lam3 = cyclic_lambda3(n)
    return math.sqrt(2.0) / (3.0 + math.sqrt(5.0)) * (1.0 - lam3), lam3


def bauer_fike_radius(epsilon: float) -> float:
    """``||V|| ||V^-1|| ||eps F||`` for the Fourier diagonalisation of a ring."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return BAUER_FIKE_CONSTANT * epsilon
