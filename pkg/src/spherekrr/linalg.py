"""Dense symmetric-positive-definite solves and symmetric tridiagonal eigenpairs.

Everything here is deterministic: identical inputs produce bit-identical
output, which the experiment harness relies on for replayable runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "NotPositiveDefiniteError",
    "SpdSystem",
    "SymmetricTridiagonal",
    "spd_solve",
    "spd_trace_inverse",
    "symtri_eigen",
]

_SYMMETRY_RTOL = 1e-12


class NotPositiveDefiniteError(ValueError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite: pivot {pivot} is not strictly positive")


@dataclass(frozen=True)
class SpdSystem:
    """A dense symmetric matrix intended to be positive definite.

    Symmetry is checked on construction; positive definiteness is established
    by the factorization itself (a failing pivot raises
    NotPositiveDefiniteError from the consuming operation).
    """

    matrix: np.ndarray
    order: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        scale = np.abs(m).max()
        if scale > 0 and np.abs(m - m.T).max() > _SYMMETRY_RTOL * scale:
            raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "order", m.shape[0])


@dataclass(frozen=True)
class SymmetricTridiagonal:
    """Symmetric tridiagonal matrix given by its diagonal and off-diagonal."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=np.float64)
        e = np.asarray(self.off_diagonal, dtype=np.float64)
        if d.ndim != 1 or e.ndim != 1 or e.shape[0] != max(d.shape[0] - 1, 0):
            raise ValueError("need diagonal of length m and off-diagonal of length m-1")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)


def _cholesky(matrix: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(matrix, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as err:
        # LAPACK reports the 1-based order of the failing leading minor.
        match = re.search(r"(\d+)", str(err))
        pivot = int(match.group(1)) - 1 if match else -1
        raise NotPositiveDefiniteError(pivot) from err


def spd_solve(system: SpdSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve system.matrix @ x = rhs by Cholesky factorization."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != system.order:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match order {system.order}")
    low = _cholesky(system.matrix)
    y = scipy.linalg.solve_triangular(low, rhs, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(low, y, lower=True, trans="T", check_finite=False)


def spd_trace_inverse(system: SpdSystem) -> float:
    """Trace of the inverse, as the squared Frobenius norm of inv(L)."""
    low = _cholesky(system.matrix)
    inv_low = scipy.linalg.solve_triangular(
        low, np.eye(system.order), lower=True, check_finite=False
    )
    return float(np.sum(inv_low * inv_low))


def symtri_eigen(tri: SymmetricTridiagonal) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and first components of the orthonormal eigenvectors."""
    if tri.diagonal.shape[0] == 1:
        return tri.diagonal.copy(), np.array([1.0])
    values, vectors = scipy.linalg.eigh_tridiagonal(
        tri.diagonal, tri.off_diagonal, check_finite=False
    )
    return values, vectors[0, :].copy()
