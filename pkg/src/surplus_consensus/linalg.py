"""Dense linear-algebra kernel used by every spectral analysis.

Matrices are plain ``numpy.ndarray`` objects. Eigenvalues come from LAPACK
``geev`` (Hessenberg reduction followed by shifted QR); ranks use the
bidiagonalisation SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericalError",
    "DIMENSION_CAP",
    "UNIT_CLUSTER_TOL",
    "RANK_TOL",
    "SpectrumReport",
    "eigenvalues",
    "numerical_rank",
    "spectral_radius",
    "kronecker",
    "matrix_power_apply",
    "format_matrix",
]

DIMENSION_CAP = 1600
UNIT_CLUSTER_TOL = 1e-8
RANK_TOL = 1e-10


class NumericalError(RuntimeError):
    """Raised when a numerical kernel fails or a size cap is exceeded."""


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Eigenvalues sorted by non-increasing modulus.

    ``unit_eigenvalue_simple`` holds when exactly one eigenvalue lies within
    :data:`UNIT_CLUSTER_TOL` of ``1`` and ``rank(m - I) = dim - 1``.
    """

    eigenvalues: np.ndarray
    moduli: np.ndarray
    unit_cluster_size: int
    unit_rank_deficiency: int | None
    unit_eigenvalue_simple: bool

    @property
    def second_modulus(self) -> float:
        return float(self.moduli[1]) if len(self.moduli) > 1 else 0.0

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def without_unit(self) -> np.ndarray:
        """Eigenvalues with the single one closest to ``1`` removed."""
        k = int(np.argmin(np.abs(self.eigenvalues - 1.0)))
        return np.delete(self.eigenvalues, k)


def _check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > DIMENSION_CAP:
        raise NumericalError(f"dimension {m.shape[0]} exceeds the cap {DIMENSION_CAP}")
    return m


def _sort_spectrum(w: np.ndarray) -> np.ndarray:
    # descending modulus, then real part, then imaginary part for a stable order
    order = np.lexsort((-w.imag, -w.real, -np.round(np.abs(w), 13)))
    return w[order]


def eigenvalues(m: np.ndarray, check_rank: bool = True) -> SpectrumReport:
    m = _check_square(m)
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    try:
        w = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    # real input: snap near-real values and pair conjugates exactly
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    tiny = np.abs(w.imag) <= 1e-14 * scale
    w[tiny] = w[tiny].real
    w = _sort_spectrum(w)
    moduli = np.abs(w)
    cluster = int(np.sum(np.abs(w - 1.0) <= UNIT_CLUSTER_TOL))
    deficiency = None
    if check_rank:
        deficiency = m.shape[0] - numerical_rank(m - np.eye(m.shape[0]), RANK_TOL)
    simple = cluster == 1 and (deficiency is None or deficiency == 1)
    return SpectrumReport(w, moduli, cluster, deficiency, simple)


def numerical_rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def spectral_radius(m: np.ndarray) -> float:
    return float(eigenvalues(m, check_rank=False).moduli[0])


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > DIMENSION_CAP:
        raise NumericalError(f"Kronecker product {rows}x{cols} exceeds the cap {DIMENSION_CAP}")
    return np.kron(a, b)


def matrix_power_apply(m: np.ndarray, v: np.ndarray, k: int) -> np.ndarray:
    """``m^k v`` by ``k`` matrix-vector products."""
    m = np.asarray(m, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[1] != v.shape[0]:
        raise ValueError(f"cannot apply matrix of shape {m.shape} to vector of shape {v.shape}")
    if k < 0:
        raise ValueError("power must be non-negative")
    out = v.copy()
    for _ in range(k):
        out = m @ out
    return out


def format_matrix(m: np.ndarray) -> str:
    """Fixed-width debug dump, one row per line."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return "\n".join(" ".join(f"{x:.12e}" for x in row) for row in m)
