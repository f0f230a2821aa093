"""Kernel and teacher expansion coefficients.

A kernel profile f on [-1, 1] induces, for each input dimension d, eigen
coefficients mu_{k,d} of its expansion over the sphere-harmonic degrees, with
the d -> infinity limit mu_k equal to the k-th Taylor coefficient of f at 0.
A teacher function g similarly carries coefficients alpha_{k,d} over the
ultraspherical system, with Hermite coefficients alpha_k in the limit.  This
module extracts both sets, by quadrature against the orthonormal polynomials
and, as an independent route for smooth kernels, by the derivative
(Rodrigues-type) identity

    mu_{k,d} = N_k / prod_{i<k}(d - 1 + 2i) * E[(1 - W^2)^k f^(k)(W)],

where W is a sphere-marginal coordinate rescaled to [-1, 1].  The assembled
CoefficientTable is the single input both the asymptotic predictor and the
finite-size simulator consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly
from numpy.polynomial.legendre import leggauss

from .orthopoly import (
    _recurrence_offdiag,
    _recurrence_values,
    gauss_rule_gaussian,
    gauss_rule_sphere_marginal,
    harmonic_dimension,
    hermite_coefficients,
    hermite_eval,
)

__all__ = [
    "KernelSpec",
    "TeacherSpec",
    "CoefficientTable",
    "QuadratureNotConverged",
    "PolynomialFunction",
    "relu",
    "named_activation",
    "gaussian_moment",
    "mu_limit_from_taylor",
    "mu_finite_quadrature",
    "mu_finite_rodrigues",
    "alpha_limit_hermite",
    "alpha_finite_quadrature",
    "random_feature_profile",
    "auto_truncation",
    "build_table",
]

_BASE_NODES = 64
_MAX_DOUBLINGS = 4
_ADAPTIVE_TOL = 1e-10


class QuadratureNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class PolynomialFunction:
    """Polynomial with ascending coefficients; picklable unlike a closure."""

    coefficients: tuple

    def __call__(self, x):
        return npoly.polyval(np.asarray(x, dtype=np.float64), self.coefficients)


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


_NAMED_ACTIVATIONS = {"relu": relu, "tanh": np.tanh, "identity": lambda x: x}


def named_activation(name: str) -> Callable:
    try:
        return _NAMED_ACTIVATIONS[name]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; known: {sorted(_NAMED_ACTIVATIONS)}") from None


def gaussian_moment(m: int) -> float:
    """E G^m for a standard normal: (m-1)!! for even m, 0 for odd m."""
    if m % 2 == 1:
        return 0.0
    value = 1.0
    for j in range(1, m, 2):
        value *= j
    return value


# ---------------------------------------------------------------------------
# Kernel and teacher specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """An inner-product kernel profile f on [-1, 1].

    Variants: "taylor" and "polynomial" carry exact ascending Taylor
    coefficients; "random_feature" carries the squared Hermite coefficients of
    an activation (see random_feature_profile); "profile" wraps an opaque
    callable and only supports the finite-d quadrature route.
    """

    variant: str
    taylor: tuple | None
    profile: Callable | None
    bound: float

    def __post_init__(self):
        grid = np.linspace(-1.0, 1.0, 1001)
        values = self.evaluate(grid)
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel profile is not finite on [-1, 1]")
        if np.max(np.abs(values)) > self.bound * (1 + 1e-12) + 1e-12:
            raise ValueError("kernel profile exceeds its declared bound on [-1, 1]")

    @classmethod
    def from_taylor(cls, coefficients, bound: float | None = None) -> "KernelSpec":
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs:
            raise ValueError("need at least one Taylor coefficient")
        if bound is None:
            bound = sum(abs(c) for c in coeffs)
        return cls("taylor", coeffs, None, float(bound))

    @classmethod
    def polynomial(cls, offset: float, degree: int) -> "KernelSpec":
        """(z + offset)^degree with offset >= 0."""
        if offset < 0:
            raise ValueError("polynomial kernel offset must be nonnegative")
        if degree < 1:
            raise ValueError("polynomial kernel degree must be a positive integer")
        coeffs = tuple(math.comb(degree, j) * offset ** (degree - j) for j in range(degree + 1))
        spec = cls.from_taylor(coeffs)
        return replace(spec, variant="polynomial")

    @classmethod
    def from_profile(cls, profile: Callable, bound: float) -> "KernelSpec":
        return cls("profile", None, profile, float(bound))

    @property
    def has_taylor(self) -> bool:
        return self.taylor is not None

    def evaluate(self, z):
        z = np.asarray(z, dtype=np.float64)
        if self.taylor is not None:
            return npoly.polyval(z, self.taylor)
        return np.asarray(self.profile(z), dtype=np.float64)

    def derivative(self, z, order: int):
        if self.taylor is None:
            raise ValueError("derivatives unavailable for profile-only kernels")
        coeffs = npoly.polyder(np.asarray(self.taylor), order) if order else np.asarray(self.taylor)
        return npoly.polyval(np.asarray(z, dtype=np.float64), coeffs)

    def value_at_one(self) -> float:
        if self.taylor is not None:
            return float(sum(self.taylor))
        return float(self.profile(1.0))


@dataclass(frozen=True)
class TeacherSpec:
    """Teacher function g with polynomial growth bound |g(x)| <= C (1 + |x|^p)."""

    g: Callable
    growth_coeff: float
    growth_power: float
    noise_sigma: float
    poly_coeffs: tuple | None = None

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise level must be nonnegative")
        grid = np.linspace(-8.0, 8.0, 401)
        values = np.asarray(self.g(grid), dtype=np.float64)
        envelope = self.growth_coeff * (1 + np.abs(grid) ** self.growth_power)
        if not np.all(np.isfinite(values)):
            raise ValueError("teacher function is not finite on the check grid")
        if np.any(np.abs(values) > envelope * (1 + 1e-9) + 1e-12):
            raise ValueError("teacher function violates its declared growth bound")

    @classmethod
    def polynomial(cls, coefficients, noise_sigma: float = 0.0) -> "TeacherSpec":
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs:
            raise ValueError("need at least one coefficient")
        growth_c = max(sum(abs(c) for c in coeffs), 1e-12)
        return cls(
            g=PolynomialFunction(coeffs),
            growth_coeff=growth_c,
            growth_power=float(len(coeffs) - 1),
            noise_sigma=float(noise_sigma),
            poly_coeffs=coeffs,
        )

    @classmethod
    def from_callable(
        cls, g: Callable, growth_coeff: float, growth_power: float, noise_sigma: float = 0.0
    ) -> "TeacherSpec":
        return cls(g, float(growth_coeff), float(growth_power), float(noise_sigma))


# ---------------------------------------------------------------------------
# Coefficient extraction
# ---------------------------------------------------------------------------


def _sphere_projection(fn: Callable, d: int, max_degree: int) -> np.ndarray:
    """Adaptive projections integral fn(x) q_k(x) dtau for k = 0..max_degree.

    Node count doubles until two successive rules agree to 1e-10 absolute.
    """
    offdiag = _recurrence_offdiag(d, max_degree + 1)

    def project(m_nodes: int) -> np.ndarray:
        rule = gauss_rule_sphere_marginal(d, m_nodes)
        fvals = np.asarray(fn(rule.nodes), dtype=np.float64)
        return np.array(
            [np.dot(rule.weights, fvals * _recurrence_values(offdiag, k, rule.nodes))
             for k in range(max_degree + 1)]
        )

    m_nodes = max(_BASE_NODES, 2 * max_degree + 32)
    previous = project(m_nodes)
    for _ in range(_MAX_DOUBLINGS):
        m_nodes *= 2
        current = project(m_nodes)
        if np.max(np.abs(current - previous)) <= _ADAPTIVE_TOL:
            return current
        previous = current
    raise QuadratureNotConverged(
        f"quadrature not converged after {_MAX_DOUBLINGS} node doublings (last m = {m_nodes})"
    )


def mu_limit_from_taylor(kernel: KernelSpec, max_degree: int) -> np.ndarray:
    """Limit coefficients mu_k, the Taylor coefficients of f at 0, padded to max_degree."""
    if not kernel.has_taylor:
        raise ValueError("limit coefficients require Taylor data (profile kernels use the finite-d path)")
    mu = np.zeros(max_degree + 1)
    upto = min(len(kernel.taylor), max_degree + 1)
    mu[:upto] = kernel.taylor[:upto]
    return mu


def mu_finite_quadrature(kernel: KernelSpec, d: int, max_degree: int) -> np.ndarray:
    """mu_{k,d} = sqrt(N_k) * integral f(x / sqrt(d)) q_k(x) dtau.

    The sqrt(N_k) factor amplifies quadrature round-off, so entries below the
    scaled noise floor are snapped to zero; a PSD kernel never has genuinely
    negative coefficients.
    """
    sqrt_d = math.sqrt(d)
    raw = _sphere_projection(lambda x: kernel.evaluate(x / sqrt_d), d, max_degree)
    scale = np.array([math.sqrt(harmonic_dimension(k, d)) for k in range(max_degree + 1)])
    mu = raw * scale
    noise_floor = 1e-13 * scale * max(1.0, kernel.bound)
    mu[np.abs(mu) <= noise_floor] = 0.0
    return mu


def mu_finite_rodrigues(kernel: KernelSpec, d: int, max_degree: int) -> np.ndarray:
    """Derivative route to mu_{k,d}; requires f^(k), so Taylor-backed kernels only."""
    if not kernel.has_taylor:
        raise ValueError("derivatives unavailable for profile-only kernels")
    sqrt_d = math.sqrt(d)
    mu = np.zeros(max_degree + 1)
    for k in range(max_degree + 1):
        def integrand(x, order=k):
            w = x / sqrt_d
            return (1 - w * w) ** order * kernel.derivative(w, order)

        expectation = _sphere_projection(integrand, d, 0)[0]
        prefactor = harmonic_dimension(k, d)
        for i in range(k):
            prefactor /= d - 1 + 2 * i
        mu[k] = prefactor * expectation
    return mu


def alpha_limit_hermite(teacher: TeacherSpec, max_degree: int) -> np.ndarray:
    """Hermite coefficients alpha_k = E[g(G) H_k(G)].

    Polynomial teachers are integrated exactly through Gaussian moments;
    otherwise Gauss-Hermite quadrature with adaptive node doubling.
    """
    if teacher.poly_coeffs is not None:
        alpha = np.zeros(max_degree + 1)
        for k in range(max_degree + 1):
            hk = hermite_coefficients(k)
            alpha[k] = sum(
                p * h * gaussian_moment(i + j)
                for j, p in enumerate(teacher.poly_coeffs)
                for i, h in enumerate(hk)
            )
        return alpha

    def project(m_nodes: int) -> np.ndarray:
        rule = gauss_rule_gaussian(m_nodes)
        gvals = np.asarray(teacher.g(rule.nodes), dtype=np.float64)
        return np.array(
            [np.dot(rule.weights, gvals * hermite_eval(k, rule.nodes))
             for k in range(max_degree + 1)]
        )

    m_nodes = max(_BASE_NODES, 2 * max_degree + 32)
    previous = project(m_nodes)
    for _ in range(_MAX_DOUBLINGS):
        m_nodes *= 2
        current = project(m_nodes)
        if np.max(np.abs(current - previous)) <= _ADAPTIVE_TOL:
            return current
        previous = current
    raise QuadratureNotConverged("quadrature not converged for teacher Hermite coefficients")


def alpha_finite_quadrature(teacher: TeacherSpec, d: int, max_degree: int) -> np.ndarray:
    """alpha_{k,d} = integral g(x) q_k(x) dtau over the sphere marginal."""
    return _sphere_projection(teacher.g, d, max_degree)


def teacher_energy_gaussian(teacher: TeacherSpec) -> float:
    """E g(G)^2 under the standard Gaussian."""
    if teacher.poly_coeffs is not None:
        p = teacher.poly_coeffs
        return float(
            sum(a * b * gaussian_moment(i + j) for i, a in enumerate(p) for j, b in enumerate(p))
        )

    def project(m_nodes: int) -> float:
        rule = gauss_rule_gaussian(m_nodes)
        gvals = np.asarray(teacher.g(rule.nodes), dtype=np.float64)
        return float(np.dot(rule.weights, gvals * gvals))

    m_nodes = _BASE_NODES
    previous = project(m_nodes)
    for _ in range(_MAX_DOUBLINGS):
        m_nodes *= 2
        current = project(m_nodes)
        if abs(current - previous) <= _ADAPTIVE_TOL:
            return current
        previous = current
    raise QuadratureNotConverged("quadrature not converged for teacher energy")


def teacher_energy_sphere(teacher: TeacherSpec, d: int) -> float:
    """Integral of g^2 against the sphere marginal."""
    return float(_sphere_projection(lambda x: np.asarray(teacher.g(x)) ** 2, d, 0)[0])


# ---------------------------------------------------------------------------
# Random-feature kernels
# ---------------------------------------------------------------------------


def _split_legendre(halfwidth: float, points_per_half: int) -> tuple[np.ndarray, np.ndarray]:
    # Panels split at 0 so activations with a kink there integrate cleanly.
    xs, ws = leggauss(points_per_half)
    nodes, weights = [], []
    for lo, hi in ((-halfwidth, 0.0), (0.0, halfwidth)):
        nodes.append(0.5 * (hi - lo) * xs + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * ws)
    return np.concatenate(nodes), np.concatenate(weights)


def _mehler_lhs(activation: Callable, z: float) -> float:
    """E[sigma(X) sigma(Y)] for jointly standard normal X, Y with correlation z."""
    x, w = _split_legendre(10.0, 80)
    sig = np.asarray(activation(x), dtype=np.float64)
    if abs(z) < 1e-15:
        phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        return float(np.dot(w, sig * phi) ** 2)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    quad_form = (xx * xx - 2 * z * xx * yy + yy * yy) / (2 * (1 - z * z))
    density = np.exp(-quad_form) / (2 * math.pi * math.sqrt(1 - z * z))
    return float(w @ (np.outer(sig, sig) * density) @ w)


def random_feature_profile(activation: Callable, hermite_truncation: int = 16) -> KernelSpec:
    """Kernel profile of an infinite-width random-feature map with this activation.

    The profile equals E[sigma(X) sigma(Y)] with corr(X, Y) = z, which by the
    Mehler expansion is sum_k c_k^2 z^k with c_k = E[sigma(G) H_k(G)].  The
    truncated expansion is validated against a direct two-dimensional Gaussian
    quadrature of the left-hand side at z in {-0.5, 0, 0.5}.
    """
    if isinstance(activation, str):
        activation = named_activation(activation)
    if hermite_truncation < 1:
        raise ValueError("hermite_truncation must be positive")
    x, w = _split_legendre(12.0, 120)
    phi = np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    sig = np.asarray(activation(x), dtype=np.float64)
    second_moment = float(np.dot(w, sig * sig * phi))
    if not np.isfinite(second_moment):
        raise ValueError("activation has no finite second moment under the Gaussian")
    c = np.array(
        [np.dot(w, sig * hermite_eval(k, x) * phi) for k in range(hermite_truncation + 1)]
    )
    mu = c * c
    for z in (-0.5, 0.0, 0.5):
        lhs = _mehler_lhs(activation, z)
        rhs = float(npoly.polyval(z, mu))
        if abs(lhs - rhs) > 1e-6:
            raise ValueError(
                "activation expansion truncation too small: "
                f"Mehler mismatch {abs(lhs - rhs):.3e} at z = {z}"
            )
    spec = KernelSpec.from_taylor(mu)
    return replace(spec, variant="random_feature")


# ---------------------------------------------------------------------------
# Table assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientTable:
    """All expansion data for one (kernel, teacher, K, d, n, lambda) regime.

    dimension_d = 0 marks a limit-only table, in which case the finite-d
    columns mirror the limit columns and delta holds only the supplied
    phase-K sampling ratio.
    """

    phase_K: int
    truncation_L: int
    dimension_d: int
    samples_n: int
    mu_limit: np.ndarray
    mu_finite: np.ndarray
    alpha_limit: np.ndarray
    alpha_finite: np.ndarray
    harmonic_dims: np.ndarray
    delta: np.ndarray
    delta_K_limit: float
    ridge: float
    ridge_effective: float
    kernel_tail_mass: float
    kernel_tail_residual: float
    tail_alpha_sq: float
    total_kernel_mass: float
    total_teacher_energy: float
    teacher_energy_sphere: float
    noise_sigma: float

    def to_dict(self) -> dict:
        out = {}
        for name, value in self.__dict__.items():
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


def auto_truncation(teacher: TeacherSpec, phase_K: int, cap: int = 16) -> int:
    """Smallest L >= K + 3 whose Hermite tail holds at most 1e-6 of the teacher energy."""
    try:
        total = teacher_energy_gaussian(teacher)
        alphas = alpha_limit_hermite(teacher, phase_K + cap)
    except QuadratureNotConverged:
        return phase_K + 4
    cumulative = np.cumsum(alphas * alphas)
    for trunc in range(phase_K + 3, phase_K + cap + 1):
        if total - cumulative[trunc] <= 1e-6 * total:
            return trunc
    return phase_K + cap


def build_table(
    kernel: KernelSpec,
    teacher: TeacherSpec,
    phase_K: int,
    ridge: float,
    truncation: int | None = None,
    d: int = 0,
    n: int = 0,
    delta_K: float | None = None,
) -> CoefficientTable:
    """Assemble the coefficient table; d = 0 builds a limit-only table.

    The effective ridge adds the kernel mass above degree K: exactly
    f(1) - sum_{k<=K} mu_k when Taylor data exists, otherwise the quadrature
    tail up to L with the remaining mass reported as a residual.
    """
    if phase_K < 1:
        raise ValueError("phase degree K must be at least 1")
    if ridge <= 0:
        raise ValueError("ridge must be positive; the ridgeless case is a separate limit")
    trunc = auto_truncation(teacher, phase_K) if truncation is None else int(truncation)
    if trunc < phase_K:
        raise ValueError(f"truncation below phase degree: L = {trunc} < K = {phase_K}")

    total_mass = kernel.value_at_one()
    if kernel.has_taylor:
        mu_lim = mu_limit_from_taylor(kernel, trunc)
    elif d == 0:
        raise ValueError("limit coefficients require Taylor data (profile kernels need d > 0)")
    else:
        mu_lim = np.full(trunc + 1, np.nan)
    alpha_lim = alpha_limit_hermite(teacher, trunc)

    if d > 0:
        mu_fin = mu_finite_quadrature(kernel, d, trunc)
        alpha_fin = alpha_finite_quadrature(teacher, d, trunc)
        dims = np.array([harmonic_dimension(k, d) for k in range(trunc + 1)])
        delta = np.full(trunc + 1, np.nan) if n <= 0 else n / dims
        delta_k_lim = n * math.factorial(phase_K) / float(d) ** phase_K if n > 0 else math.nan
        energy_sphere = teacher_energy_sphere(teacher, d)
    else:
        mu_fin = mu_lim.copy()
        alpha_fin = alpha_lim.copy()
        dims = np.full(trunc + 1, np.nan)
        delta = np.full(trunc + 1, np.nan)
        if delta_K is not None:
            delta[phase_K] = float(delta_K)
        delta_k_lim = float(delta_K) if delta_K is not None else math.nan
        energy_sphere = None  # filled below

    if kernel.has_taylor:
        tail_mass = total_mass - float(np.sum(mu_lim[: phase_K + 1]))
        tail_residual = 0.0
    else:
        tail_mass = float(np.sum(mu_fin[phase_K + 1 :]))
        tail_residual = total_mass - float(np.sum(mu_fin))

    total_energy = teacher_energy_gaussian(teacher)
    if energy_sphere is None:
        energy_sphere = total_energy
    tail_alpha = total_energy - float(np.sum(alpha_lim[: phase_K + 1] ** 2))

    table = CoefficientTable(
        phase_K=phase_K,
        truncation_L=trunc,
        dimension_d=int(d),
        samples_n=int(n),
        mu_limit=mu_lim,
        mu_finite=mu_fin,
        alpha_limit=alpha_lim,
        alpha_finite=alpha_fin,
        harmonic_dims=dims,
        delta=delta,
        delta_K_limit=delta_k_lim,
        ridge=float(ridge),
        ridge_effective=float(ridge) + tail_mass,
        kernel_tail_mass=tail_mass,
        kernel_tail_residual=tail_residual,
        tail_alpha_sq=tail_alpha,
        total_kernel_mass=total_mass,
        total_teacher_energy=total_energy,
        teacher_energy_sphere=energy_sphere,
        noise_sigma=teacher.noise_sigma,
    )
    _validate_table(table)
    return table


def _validate_table(table: CoefficientTable) -> None:
    for mu in (table.mu_limit, table.mu_finite):
        finite = mu[np.isfinite(mu)]
        if np.any(finite < -1e-12):
            raise ValueError("kernel eigen-coefficients must be nonnegative (PSD kernel)")
    active = table.mu_limit if np.all(np.isfinite(table.mu_limit)) else table.mu_finite
    if active[table.phase_K] <= 0:
        raise ValueError("kernel mass vanishes at the phase degree K; mu_K must be positive")
    # Below K the kernel only needs mass where the teacher actually has energy,
    # otherwise the perfectly-learned-low-degrees premise is moot.
    alpha = table.alpha_limit
    energy_floor = 1e-12 * max(table.total_teacher_energy, 1.0)
    for k in range(table.phase_K):
        if active[k] <= 0 and alpha[k] ** 2 > energy_floor:
            raise ValueError(
                f"kernel mass vanishes at degree {k} < K while the teacher has energy there; "
                "low degrees must be learnable in the phase-K regime"
            )
    for mu in (table.mu_limit, table.mu_finite):
        if np.all(np.isfinite(mu)) and np.sum(mu) > table.total_kernel_mass + 1e-9:
            raise ValueError("partial kernel mass exceeds f(1)")
    if float(np.sum(table.alpha_limit**2)) > table.total_teacher_energy + 1e-9:
        raise ValueError("teacher coefficients violate the Bessel bound (Gaussian)")
    if float(np.sum(table.alpha_finite**2)) > table.teacher_energy_sphere + 1e-9:
        raise ValueError("teacher coefficients violate the Bessel bound (sphere)")
    if table.ridge_effective < table.ridge:
        raise ValueError("effective ridge fell below the bare ridge")
