"""Asymptotic train/test error predictions at polynomial sample scaling.

At sample size n ~ delta * d^K / K! the learning curve of kernel ridge
regression is governed by a single scalar R*, the Stieltjes transform of a
Marchenko-Pastur law with variance mu_K and aspect ratio 1/delta_K, evaluated
at the effective ridge

    lambda_eff = lambda + sum_{k > K} mu_k.

R* is the unique nonnegative root of  1/R = lambda_eff + mu/(1 + delta mu R),
equivalently of the quadratic  a R^2 + b R - 1 = 0  with a = lambda_eff mu
delta and b = lambda_eff + mu - mu delta.  All predicted quantities (training
error, test error, bias/variance split, per-degree bias contributions) are
explicit functions of R*, plus an inflation factor

    theta = (1 + mu delta R*)^2 / (delta mu^2 R*^2),

which multiplies the noise: the asymptotic variance is sigma^2 / (theta - 1).
A one-parameter perturbation of the fixed point, R(lambda_eff, eps) with mu
replaced by mu (1 + eps mu delta), carries the derivative identity
R'_eps(0) = -1/(theta - 1) used to assemble the quadratic part of the test
error; gamma_limit below is the corresponding perturbed training functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientTable

__all__ = [
    "Regime",
    "Prediction",
    "PerturbedPoint",
    "stieltjes_mp",
    "theta",
    "predict",
    "bias_variance",
    "ridgeless_limit",
    "perturbed_stieltjes",
    "stieltjes_derivative_at_zero",
    "gamma_limit",
]

_RESIDUAL_GUARD = 1e-9


@dataclass(frozen=True)
class Regime:
    """Scaling regime: phase degree K, sampling ratio delta_K, ridge."""

    phase_K: int
    delta_K: float
    ridge: float
    dimension_d: int = 0
    samples_n: int = 0

    def __post_init__(self):
        if self.delta_K <= 0:
            raise ValueError("delta_K must be positive")
        if self.ridge <= 0:
            raise ValueError("ridge must be positive; use ridgeless_limit for lambda -> 0")


@dataclass(frozen=True)
class Prediction:
    """Asymptotic outputs for one regime.

    bias_by_degree[k] is the degree-k contribution to the squared bias for
    k <= L; bias_beyond_truncation carries the teacher energy above L (zero
    for band-limited teachers), so that
    sum(bias_by_degree) + bias_beyond_truncation == bias.
    """

    r_star: float
    theta: float
    e_train: float
    e_test: float
    bias: float
    variance: float
    bias_by_degree: np.ndarray
    bias_beyond_truncation: float


@dataclass(frozen=True)
class PerturbedPoint:
    epsilon: float
    r_value: float


def stieltjes_mp(lambda_eff: float, mu: float, delta: float) -> float:
    """Unique nonnegative root of 1/R = lambda_eff + mu/(1 + delta mu R).

    Evaluated through whichever quadratic-root branch avoids subtractive
    cancellation, so the result is uniformly accurate across the
    small-lambda, small-delta and large-delta ends.
    """
    if lambda_eff <= 0:
        raise ValueError("nonpositive effective ridge: use ridgeless_limit for the lambda -> 0 limit")
    if mu < 0 or delta <= 0:
        raise ValueError("need mu >= 0 and delta > 0")
    if mu == 0:
        return 1.0 / lambda_eff
    a = lambda_eff * mu * delta
    b = lambda_eff + mu - mu * delta
    root_disc = math.sqrt(b * b + 4 * a)
    r_value = 2.0 / (b + root_disc) if b >= 0 else (root_disc - b) / (2 * a)
    residual = abs(1.0 / r_value - lambda_eff - mu / (1 + delta * mu * r_value))
    if not residual <= _RESIDUAL_GUARD * max(1.0, lambda_eff + mu):
        raise ArithmeticError(f"fixed-point residual {residual:.3e} out of tolerance")
    return r_value


def theta(lambda_eff: float, mu: float, delta: float) -> float:
    """Variance inflation factor (1 + mu delta R*)^2 / (delta mu^2 R*^2); > 1 for lambda_eff > 0."""
    if mu == 0:
        return math.inf
    r_value = stieltjes_mp(lambda_eff, mu, delta)
    ratio = (1 + mu * delta * r_value) / (mu * r_value)
    return ratio * ratio / delta


def _active_sets(table: CoefficientTable, regime: Regime, mode: str):
    """Coefficient arrays, effective ridge and teacher tail for the chosen mode."""
    if mode == "limit":
        mu = table.mu_limit
        alpha = table.alpha_limit
        if not np.all(np.isfinite(mu)):
            raise ValueError(
                "limit coefficients require Taylor data; use mode='plugin' for profile kernels"
            )
        lambda_eff = regime.ridge + table.kernel_tail_mass + table.kernel_tail_residual
        tail_alpha_sq = table.tail_alpha_sq
    elif mode == "plugin":
        # Heuristic: Theorem-level formulas evaluated with finite-d coefficients.
        mu = table.mu_finite
        alpha = table.alpha_finite
        lambda_eff = regime.ridge + (
            table.total_kernel_mass - float(np.sum(mu[: regime.phase_K + 1]))
        )
        tail_alpha_sq = table.teacher_energy_sphere - float(
            np.sum(alpha[: regime.phase_K + 1] ** 2)
        )
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'limit' or 'plugin'")
    return mu, alpha, lambda_eff, max(tail_alpha_sq, 0.0)


def predict(table: CoefficientTable, regime: Regime, mode: str = "limit") -> Prediction:
    """Evaluate the asymptotic training/test errors and the bias decomposition."""
    if table.phase_K != regime.phase_K:
        raise ValueError(f"table is for K = {table.phase_K}, regime has K = {regime.phase_K}")
    mu, alpha, lambda_eff, tail_alpha_sq = _active_sets(table, regime, mode)
    k_phase = regime.phase_K
    mu_k = float(mu[k_phase])
    if mu_k <= 0:
        raise ValueError("phase-degree kernel coefficient mu_K must be strictly positive")
    if lambda_eff <= 0:
        raise ValueError("effective ridge must be positive")
    delta = regime.delta_K
    sigma_sq = table.noise_sigma**2
    alpha_k_sq = float(alpha[k_phase]) ** 2

    r_star = stieltjes_mp(lambda_eff, mu_k, delta)
    denom = 1 + mu_k * delta * r_star
    ratio = denom / (mu_k * r_star)
    theta_val = ratio * ratio / delta

    e_train = regime.ridge * (
        alpha_k_sq * r_star / denom + (sigma_sq + tail_alpha_sq) * r_star
    )
    learned_bias = theta_val * alpha_k_sq / (denom * denom) / (theta_val - 1)
    bias = learned_bias + theta_val * tail_alpha_sq / (theta_val - 1)
    variance = sigma_sq / (theta_val - 1)
    e_test = bias + variance

    bias_by_degree = np.zeros(table.truncation_L + 1)
    bias_by_degree[k_phase] = learned_bias + tail_alpha_sq / (theta_val - 1)
    high = np.asarray(alpha[k_phase + 1 :]) ** 2
    bias_by_degree[k_phase + 1 :] = high
    bias_beyond = tail_alpha_sq - float(np.sum(high))

    return Prediction(
        r_star=r_star,
        theta=theta_val,
        e_train=e_train,
        e_test=e_test,
        bias=bias,
        variance=variance,
        bias_by_degree=bias_by_degree,
        bias_beyond_truncation=bias_beyond,
    )


def bias_variance(table: CoefficientTable, regime: Regime, mode: str = "limit") -> tuple[float, float]:
    pred = predict(table, regime, mode)
    return pred.bias, pred.variance


def _richardson(values: list[float], ratio: float) -> float:
    # values at lambda, lambda/ratio, lambda/ratio^2; assumes analytic error in lambda
    first = [(ratio * values[i + 1] - values[i]) / (ratio - 1) for i in range(len(values) - 1)]
    return (ratio**2 * first[1] - first[0]) / (ratio**2 - 1)


def ridgeless_limit(
    alpha_K: float, mu_K: float, delta: float, sigma_z: float
) -> tuple[float, float]:
    """Numeric lambda -> 0 limit of (bias, variance) for a pure degree-K spectrum.

    Richardson-extrapolated over lambda in {1e-4, 1e-6, 1e-8}; the limits are
    bias = alpha_K^2 max(1 - delta, 0) and variance = sigma^2 delta/(1 - delta)
    below the interpolation threshold, sigma^2/(delta - 1) above it.
    """
    if mu_K <= 0 or delta <= 0:
        raise ValueError("need mu_K > 0 and delta > 0")
    if delta == 1:
        raise ValueError("interpolation threshold: variance diverges at delta = 1")
    biases, variances = [], []
    for lam in (1e-4, 1e-6, 1e-8):
        r_value = stieltjes_mp(lam, mu_K, delta)
        denom = 1 + mu_K * delta * r_value
        theta_val = (denom / (mu_K * r_value)) ** 2 / delta
        biases.append(theta_val * alpha_K**2 / (denom * denom) / (theta_val - 1))
        variances.append(sigma_z**2 / (theta_val - 1))
    return _richardson(biases, 100.0), _richardson(variances, 100.0)


def perturbed_stieltjes(
    lambda_eff: float, mu: float, delta: float, epsilon: float
) -> PerturbedPoint:
    """Perturbed fixed point R(lambda_eff, eps): mu inflated to mu (1 + eps mu delta).

    Defined for |eps| <= eps0 = 1/(2 mu delta), where the perturbed spectral
    mass stays nonnegative.
    """
    if mu <= 0 or delta <= 0:
        raise ValueError("need mu > 0 and delta > 0")
    eps0 = 0.5 / (mu * delta)
    if abs(epsilon) > eps0 * (1 + 1e-12):
        raise ValueError(f"outside perturbation domain: |epsilon| > {eps0:.6g}")
    r_value = stieltjes_mp(lambda_eff, mu * (1 + epsilon * mu * delta), delta)
    return PerturbedPoint(epsilon, r_value)


def stieltjes_derivative_at_zero(lambda_eff: float, mu: float, delta: float) -> float:
    """d/d eps of the perturbed fixed point at eps = 0, in closed form: -1/(theta - 1)."""
    return -1.0 / (theta(lambda_eff, mu, delta) - 1.0)


def gamma_limit(
    table: CoefficientTable, regime: Regime, epsilon: float, mode: str = "limit"
) -> float:
    """Perturbed training functional; gamma_limit(..., 0) * lambda equals e_train."""
    mu, alpha, lambda_eff, tail_alpha_sq = _active_sets(table, regime, mode)
    k_phase = regime.phase_K
    mu_k = float(mu[k_phase])
    delta = regime.delta_K
    point = perturbed_stieltjes(lambda_eff, mu_k, delta, epsilon)
    r_value = point.r_value
    inflated = mu_k * (1 + epsilon * mu_k * delta)
    alpha_k_sq = float(alpha[k_phase]) ** 2
    sigma_sq = table.noise_sigma**2
    return alpha_k_sq * r_value / (1 + delta * inflated * r_value) + (
        sigma_sq + tail_alpha_sq
    ) * r_value
