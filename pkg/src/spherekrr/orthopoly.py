"""Orthonormal polynomial systems on the sphere marginal and the Gaussian line.

The sphere marginal is the law of a single coordinate of a uniform point on
the radius-sqrt(d) sphere; its density on [-sqrt(d), sqrt(d)] is proportional
to (1 - x^2/d)^((d-3)/2).  The orthonormal polynomials q_k for this measure
start q_0 = 1, q_1 = x and satisfy q_k(sqrt(d)) = sqrt(N_k) with N_k the
dimension of the degree-k spherical-harmonic space.  As d grows, q_k tends
pointwise to the orthonormal probabilists' Hermite polynomial H_k.

Quadrature rules for both measures are built by diagonalizing the Jacobi
matrix of the three-term recurrence (Golub-Welsch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import SymmetricTridiagonal, symtri_eigen

__all__ = [
    "UltrasphericalBasis",
    "QuadratureRule",
    "SphereMarginalMoments",
    "HermiteBasis",
    "harmonic_dimension",
    "sphere_marginal_moment",
    "build_ultraspherical",
    "ultraspherical_eval",
    "ultraspherical_eval_matrix",
    "ultraspherical_via_moments",
    "hermite_eval",
    "hermite_coefficients",
    "gauss_rule_sphere_marginal",
    "gauss_rule_gaussian",
    "hermite_limit_check",
]


def harmonic_dimension(k: int, d: int) -> float:
    """Dimension N_k of the space of degree-k spherical harmonics in d variables.

    N_0 = 1, N_1 = d and N_k = ((d + 2k - 2)/k) * C(d + k - 3, k - 1) for
    k >= 2.  Computed in exact integer arithmetic and returned as a float,
    which rounds only when the count exceeds 2^53.
    """
    if d < 3:
        raise ValueError(f"dimension too small: need d >= 3, got d = {d}")
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k == 0:
        return 1.0
    if k == 1:
        return float(d)
    numerator = (d + 2 * k - 2) * math.comb(d + k - 3, k - 1)
    return float(numerator // k)


def sphere_marginal_moment(m: int, d: int) -> float:
    """m-th moment of the sphere marginal: 0 for odd m, a damped double factorial for even m."""
    if m < 0:
        raise ValueError("moment order must be nonnegative")
    if m % 2 == 1:
        return 0.0
    k = m // 2
    value = 1.0
    for i in range(k):
        value *= (2 * i + 1) / (1.0 + 2.0 * i / d)
    return value


def _recurrence_offdiag(d: int, count: int) -> np.ndarray:
    """Off-diagonal b_1..b_count of the recurrence x q_k = b_{k+1} q_{k+1} + b_k q_{k-1}.

    Closed-form ratios of the Gegenbauer-type weight; no Gamma evaluations, so
    arbitrarily large d is safe.
    """
    k = np.arange(1, count + 1, dtype=np.float64)
    b_sq = d * k * (k + d - 3) / ((2 * k + d - 4) * (2 * k + d - 2))
    if np.any(b_sq <= 0):
        raise ValueError(f"invalid weight parameters: nonpositive recurrence coefficient for d = {d}")
    return np.sqrt(b_sq)


@dataclass(frozen=True)
class UltrasphericalBasis:
    """Orthonormal polynomials of the sphere marginal, up to degree max_degree_L.

    offdiag[i] holds b_{i+1} of the symmetric recurrence on x in [-sqrt(d), sqrt(d)].
    """

    dimension_d: int
    max_degree_L: int
    offdiag: np.ndarray


def build_ultraspherical(d: int, max_degree: int) -> UltrasphericalBasis:
    if d < 3:
        raise ValueError(f"dimension too small: need d >= 3, got d = {d}")
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    return UltrasphericalBasis(d, max_degree, _recurrence_offdiag(d, max(max_degree, 1)))


def _recurrence_values(offdiag: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    q_prev = np.zeros_like(x)
    q = np.ones_like(x)
    for j in range(k):
        b_prev = offdiag[j - 1] if j > 0 else 0.0
        q_prev, q = q, (x * q - b_prev * q_prev) / offdiag[j]
    return q


def ultraspherical_eval(basis: UltrasphericalBasis, k: int, x: float) -> float:
    """Evaluate q_k at a scalar point."""
    if k > basis.max_degree_L:
        raise ValueError(f"degree exceeds basis: {k} > {basis.max_degree_L}")
    return float(_recurrence_values(basis.offdiag, k, np.asarray(x, dtype=np.float64)))


def ultraspherical_eval_matrix(
    basis: UltrasphericalBasis, k: int, values: np.ndarray
) -> tuple[np.ndarray, bool]:
    """Elementwise q_k of an array.

    Also reports whether any entry lies outside the support [-sqrt(d), sqrt(d)];
    such evaluations are permitted but usually indicate an input off the sphere.
    """
    if k > basis.max_degree_L:
        raise ValueError(f"degree exceeds basis: {k} > {basis.max_degree_L}")
    values = np.asarray(values, dtype=np.float64)
    out_of_support = bool(np.any(np.abs(values) > math.sqrt(basis.dimension_d)))
    return _recurrence_values(basis.offdiag, k, values), out_of_support


def ultraspherical_via_moments(d: int, k: int, x: float) -> float:
    """Gram-Schmidt evaluation of q_k from raw moments.

    Orthonormalizes the monomials against the Hankel matrix of sphere-marginal
    moments.  Conditioning degrades quickly in k, so this is a cross-check for
    small degrees, not a production path.
    """
    hankel = np.array(
        [[sphere_marginal_moment(i + j, d) for j in range(k + 1)] for i in range(k + 1)]
    )
    low = scipy.linalg.cholesky(hankel, lower=True)
    monomials = np.array([x**j for j in range(k + 1)], dtype=np.float64)
    coords = scipy.linalg.solve_triangular(low, monomials, lower=True)
    return float(coords[k])


@dataclass(frozen=True)
class SphereMarginalMoments:
    """Cached even moments of the sphere marginal for one dimension."""

    dimension_d: int
    max_order: int
    even_moments: np.ndarray

    @classmethod
    def build(cls, d: int, max_order: int) -> "SphereMarginalMoments":
        ev = np.array([sphere_marginal_moment(2 * k, d) for k in range(max_order // 2 + 1)])
        return cls(d, max_order, ev)

    def moment(self, m: int) -> float:
        if m % 2 == 1:
            return 0.0
        return float(self.even_moments[m // 2])


@dataclass(frozen=True)
class HermiteBasis:
    """Orthonormal probabilists' Hermite polynomials up to max_degree_L."""

    max_degree_L: int


def hermite_eval(k: int, x) -> float | np.ndarray:
    """Orthonormal probabilists' Hermite H_k via x H_k = sqrt(k+1) H_{k+1} + sqrt(k) H_{k-1}."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for j in range(k):
        h_prev, h = h, (x * h - math.sqrt(j) * h_prev) / math.sqrt(j + 1)
    return float(h) if h.ndim == 0 else h


def hermite_coefficients(k: int) -> np.ndarray:
    """Monomial coefficients (ascending) of the orthonormal H_k, exact in floats."""
    coeffs = [np.array([1.0]), np.array([0.0, 1.0])]
    for j in range(1, k):
        nxt = np.zeros(j + 2)
        nxt[1:] = coeffs[j]
        nxt[: j] -= math.sqrt(j) * coeffs[j - 1]
        coeffs.append(nxt / math.sqrt(j + 1))
    return coeffs[k]


@dataclass(frozen=True)
class QuadratureRule:
    """Gaussian quadrature rule for a probability measure."""

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int
    measure_tag: str

    def integrate(self, fn) -> float:
        return float(np.dot(self.weights, fn(self.nodes)))

    def integrate_values(self, values: np.ndarray) -> float | np.ndarray:
        return self.weights @ values


def _golub_welsch(offdiag: np.ndarray, m_nodes: int, tag: str) -> QuadratureRule:
    tri = SymmetricTridiagonal(np.zeros(m_nodes), offdiag[: m_nodes - 1])
    nodes, first = symtri_eigen(tri)
    weights = first * first
    # Both measures are even probability measures: symmetrize and renormalize
    # to pin down the invariants exactly.
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / weights.sum()
    return QuadratureRule(nodes, weights, 2 * m_nodes - 1, tag)


def gauss_rule_sphere_marginal(d: int, m_nodes: int) -> QuadratureRule:
    """Gaussian rule for the sphere marginal; exact through degree 2*m_nodes - 1."""
    if m_nodes < 1:
        raise ValueError("need at least one node")
    return _golub_welsch(_recurrence_offdiag(d, m_nodes), m_nodes, f"sphere_marginal({d})")


def gauss_rule_gaussian(m_nodes: int) -> QuadratureRule:
    """Gauss-Hermite rule for the standard Gaussian; exact through degree 2*m_nodes - 1."""
    if m_nodes < 1:
        raise ValueError("need at least one node")
    offdiag = np.sqrt(np.arange(1, m_nodes, dtype=np.float64))
    return _golub_welsch(offdiag, m_nodes, "gaussian")


def hermite_limit_check(d_list, k: int, x: float) -> np.ndarray:
    """|q_{k,d}(x) - H_k(x)| for each d; a diagnostic of the large-d Hermite limit."""
    target = hermite_eval(k, x)
    errors = []
    for d in d_list:
        basis = build_ultraspherical(int(d), k)
        errors.append(abs(ultraspherical_eval(basis, k, x) - target))
    return np.array(errors)
