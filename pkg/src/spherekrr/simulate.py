"""Finite-size kernel ridge regression experiments on the sqrt(d)-sphere.

A trial samples n points uniformly on the radius-sqrt(d) sphere, labels them
through a teacher acting on the projection onto a hidden direction, assembles
the inner-product kernel Gram matrix and solves the ridge system.  Test error
is measured two ways: by Monte Carlo over fresh points, and semi-analytically
by integrating out the test point exactly (conditional on the training data)
through the harmonic expansion of kernel and teacher truncated at the table's
degree L.  The module also hosts the Gaussian-equivalent surrogate experiment
and a Wishart Monte Carlo estimate of the Stieltjes transform.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientTable, KernelSpec, TeacherSpec
from .linalg import SpdSystem, spd_solve, spd_trace_inverse
from .orthopoly import _recurrence_offdiag
from .rng import RandomStream

__all__ = [
    "Dataset",
    "KrrFit",
    "EmpiricalRun",
    "sample_sphere",
    "make_dataset",
    "kernel_gram",
    "krr_fit",
    "empirical_train_error",
    "test_error_mc",
    "test_error_semianalytic",
    "kernel_trial",
    "gaussian_equivalent_run",
    "wishart_stieltjes_mc",
]

_CLAMP_TOL = 1e-9
_MC_CHUNK = 20_000


@dataclass(frozen=True)
class Dataset:
    """Training sample: rows of `features` lie on the radius-sqrt(d) sphere."""

    features: np.ndarray
    direction: np.ndarray
    eta: np.ndarray
    labels: np.ndarray
    noise: np.ndarray

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class KrrFit:
    """Solved ridge system: coefficients c = (lambda I + K)^(-1) y."""

    gram: np.ndarray
    ridge: float
    coefficients: np.ndarray


@dataclass(frozen=True)
class EmpiricalRun:
    """Per-trial measurements; e_test_mc is None when Monte Carlo was skipped."""

    trial_seed: int
    e_train: float
    e_test_semi: float
    e_test_mc: float | None
    e_test_mc_se: float | None
    truncation_L: int
    elapsed_ms: float


def sample_sphere(stream: RandomStream, n: int, d: int) -> np.ndarray:
    """n i.i.d. uniform points on the radius-sqrt(d) sphere, as rows."""
    raw = stream.standard_normal(n, d)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * (math.sqrt(d) / norms)


def make_dataset(teacher: TeacherSpec, stream: RandomStream, n: int, d: int) -> Dataset:
    """Sample features, a hidden direction, and noisy teacher labels."""
    features = sample_sphere(stream, n, d)
    direction = sample_sphere(stream, 1, d)[0]
    eta = features @ direction / math.sqrt(d)
    noise = stream.standard_normal(n)
    labels = np.asarray(teacher.g(eta), dtype=np.float64) + teacher.noise_sigma * noise
    return Dataset(features, direction, eta, labels, noise)


def kernel_gram(kernel: KernelSpec, features: np.ndarray) -> np.ndarray:
    """Gram matrix K_ij = f(x_i . x_j / d) for rows on the sphere."""
    n, d = features.shape
    args = features @ features.T / d
    args = 0.5 * (args + args.T)
    worst = np.max(np.abs(args))
    if worst > 1 + _CLAMP_TOL:
        raise ValueError(
            f"off-sphere input: kernel argument {worst:.12f} outside [-1, 1] beyond tolerance"
        )
    np.clip(args, -1.0, 1.0, out=args)
    np.fill_diagonal(args, 1.0)
    return np.asarray(kernel.evaluate(args), dtype=np.float64)


def krr_fit(gram: np.ndarray, labels: np.ndarray, ridge: float) -> KrrFit:
    if ridge <= 0:
        raise ValueError("ridge must be positive")
    n = gram.shape[0]
    system = SpdSystem(gram + ridge * np.eye(n))
    coefficients = spd_solve(system, labels)
    return KrrFit(gram, float(ridge), coefficients)


def empirical_train_error(fit: KrrFit, labels: np.ndarray) -> float:
    """Training error, computed two ways and cross-checked.

    The resolvent form (lambda/n) y.c must agree with the direct objective
    (1/n)(|y - K c|^2 + lambda c.K c); disagreement signals solver breakdown.
    """
    n = labels.shape[0]
    c = fit.coefficients
    kc = fit.gram @ c
    resolvent_form = fit.ridge / n * float(labels @ c)
    direct_form = (float(np.sum((labels - kc) ** 2)) + fit.ridge * float(c @ kc)) / n
    scale = max(abs(resolvent_form), abs(direct_form), 1e-300)
    if abs(resolvent_form - direct_form) > 1e-8 * scale:
        raise ArithmeticError(
            f"train-error identity violated: {resolvent_form:.6e} vs {direct_form:.6e}"
        )
    return resolvent_form


def test_error_mc(
    fit: KrrFit,
    dataset: Dataset,
    teacher: TeacherSpec,
    kernel: KernelSpec,
    m_test: int,
    stream: RandomStream,
) -> tuple[float, float]:
    """Monte Carlo test error over fresh sphere points, with its standard error."""
    if m_test < 1000:
        raise ValueError("need at least 1000 test points for a meaningful standard error")
    d = dataset.d
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < m_test:
        m = min(_MC_CHUNK, m_test - done)
        fresh = sample_sphere(stream, m, d)
        cross = fresh @ dataset.features.T / d
        np.clip(cross, -1.0, 1.0, out=cross)
        predicted = np.asarray(kernel.evaluate(cross), dtype=np.float64) @ fit.coefficients
        target = np.asarray(teacher.g(fresh @ dataset.direction / math.sqrt(d)), dtype=np.float64)
        gap_sq = (target - predicted) ** 2
        total += float(np.sum(gap_sq))
        total_sq += float(np.sum(gap_sq * gap_sq))
        done += m
    mean = total / m_test
    var = max(total_sq / m_test - mean * mean, 0.0) * m_test / (m_test - 1)
    return mean, math.sqrt(var / m_test)


def test_error_semianalytic(fit: KrrFit, table: CoefficientTable, dataset: Dataset) -> float:
    """Exact test error conditional on the training data, truncated at degree L.

    Integrates the fresh test point out analytically:
      part one is the full teacher energy under the sphere marginal (no
      truncation, by the Parseval identity);
      part two is the teacher/predictor cross term (2/n) gtilde . c with
      gtilde_i = sum_k mu_{k,d} (n/N_k) alpha_{k,d} q_k(eta_i);
      part three is c . A c with A = sum_k mu_{k,d}^2 N_k^(-3/2) q_k applied
      elementwise to X X^T / sqrt(d).
    """
    k_max = table.truncation_L
    if k_max < table.phase_K:
        raise ValueError("truncation below phase degree")
    if table.dimension_d != dataset.d:
        raise ValueError(
            f"table dimension {table.dimension_d} does not match dataset dimension {dataset.d}"
        )
    n, d = dataset.n, dataset.d
    c = fit.coefficients
    offdiag = _recurrence_offdiag(d, max(k_max, 1))

    part_one = table.teacher_energy_sphere

    # Run both recurrences degree by degree, accumulating each contribution.
    eta = dataset.eta
    pair_args = dataset.features @ dataset.features.T / math.sqrt(d)
    q_eta_prev = np.zeros_like(eta)
    q_eta = np.ones_like(eta)
    q_pair_prev = np.zeros_like(pair_args)
    q_pair = np.ones_like(pair_args)
    gtilde = np.zeros_like(eta)
    part_three = 0.0
    for k in range(k_max + 1):
        if k > 0:
            b_prev = offdiag[k - 2] if k > 1 else 0.0
            q_eta_prev, q_eta = q_eta, (eta * q_eta - b_prev * q_eta_prev) / offdiag[k - 1]
            q_pair_prev, q_pair = (
                q_pair,
                (pair_args * q_pair - b_prev * q_pair_prev) / offdiag[k - 1],
            )
        mu_k = float(table.mu_finite[k])
        alpha_k = float(table.alpha_finite[k])
        dim_k = float(table.harmonic_dims[k])
        if mu_k == 0.0:
            continue
        gtilde = gtilde + (mu_k * (n / dim_k) * alpha_k) * q_eta
        part_three += (mu_k * mu_k / dim_k**1.5) * float(c @ (q_pair @ c))
    part_two = 2.0 / n * float(gtilde @ c)
    return max(part_one - part_two + part_three, 0.0)


def kernel_trial(
    kernel: KernelSpec,
    teacher: TeacherSpec,
    table: CoefficientTable,
    n: int,
    d: int,
    ridge: float,
    stream: RandomStream,
    m_test: int = 0,
) -> EmpiricalRun:
    """One full finite-size experiment: sample, fit, measure."""
    start = time.perf_counter()
    dataset = make_dataset(teacher, stream, n, d)
    fit = krr_fit(kernel_gram(kernel, dataset.features), dataset.labels, ridge)
    e_train = empirical_train_error(fit, dataset.labels)
    e_semi = test_error_semianalytic(fit, table, dataset)
    e_mc = se_mc = None
    if m_test > 0:
        e_mc, se_mc = test_error_mc(fit, dataset, teacher, kernel, m_test, stream)
    elapsed = (time.perf_counter() - start) * 1e3
    return EmpiricalRun(
        trial_seed=stream.stream_index,
        e_train=e_train,
        e_test_semi=e_semi,
        e_test_mc=e_mc,
        e_test_mc_se=se_mc,
        truncation_L=table.truncation_L,
        elapsed_ms=elapsed,
    )


def gaussian_equivalent_run(
    table: CoefficientTable,
    n: int,
    ridge: float,
    stream: RandomStream,
    feature_cap: int = 5_000_000,
) -> EmpiricalRun:
    """Ridge regression on the Gaussian surrogate of the harmonic feature map.

    Block k of the feature vector is N(0, (mu_{k,d}/N_k) I_{N_k}); the teacher
    direction per block is replaced by i.i.d. standard normals as well (the
    surrogate matches the harmonic features in mean and covariance).  Kernel
    mass above the truncation degree L folds into the ridge, and teacher
    energy above L folds into the label noise and re-enters the test error as
    an unlearnable constant, so the surrogate is comparable to the full kernel
    experiment, not just its truncation.  The test error is the exact Gaussian
    quadratic form over a fresh feature vector, so it carries no Monte Carlo
    noise.
    """
    if table.dimension_d <= 0:
        raise ValueError("surrogate needs a finite-d table")
    start = time.perf_counter()
    k_max = table.truncation_L
    dims = [int(round(float(table.harmonic_dims[k]))) for k in range(k_max + 1)]
    total_dim = int(sum(dims))
    if total_dim > feature_cap:
        raise ValueError(f"surrogate dimension too large: {total_dim} > cap {feature_cap}")

    block_scale = np.sqrt(np.maximum(table.mu_finite[: k_max + 1], 0.0) / np.asarray(dims))
    features = np.empty((n, total_dim))
    signal = np.zeros(n)
    beta_blocks = []
    offset = 0
    for k, dim_k in enumerate(dims):
        u_block = stream.standard_normal(n, dim_k)
        beta_k = stream.standard_normal(dim_k)
        beta_blocks.append(beta_k)
        features[:, offset : offset + dim_k] = block_scale[k] * u_block
        signal += (float(table.alpha_finite[k]) / math.sqrt(dim_k)) * (u_block @ beta_k)
        offset += dim_k

    unlearnable = max(
        table.teacher_energy_sphere - float(np.sum(table.alpha_finite[: k_max + 1] ** 2)), 0.0
    )
    ridge_eff = ridge + max(
        table.total_kernel_mass - float(np.sum(table.mu_finite[: k_max + 1])), 0.0
    )
    noise_sd = math.sqrt(table.noise_sigma**2 + unlearnable)
    labels = signal + noise_sd * stream.standard_normal(n)

    if total_dim < n:
        system = SpdSystem(features.T @ features + ridge_eff * np.eye(total_dim))
        estimate = spd_solve(system, features.T @ labels)
    else:
        system = SpdSystem(features @ features.T + ridge_eff * np.eye(n))
        estimate = features.T @ spd_solve(system, labels)

    residual = labels - features @ estimate
    e_train = (float(residual @ residual) + ridge_eff * float(estimate @ estimate)) / n

    e_test = unlearnable
    offset = 0
    for k, dim_k in enumerate(dims):
        target_k = (float(table.alpha_finite[k]) / math.sqrt(dim_k)) * beta_blocks[k]
        fitted_k = block_scale[k] * estimate[offset : offset + dim_k]
        gap = target_k - fitted_k
        e_test += float(gap @ gap)
        offset += dim_k

    elapsed = (time.perf_counter() - start) * 1e3
    return EmpiricalRun(
        trial_seed=stream.stream_index,
        e_train=e_train,
        e_test_semi=e_test,
        e_test_mc=None,
        e_test_mc_se=None,
        truncation_L=k_max,
        elapsed_ms=elapsed,
    )


def wishart_stieltjes_mc(
    lambda_eff: float, mu: float, delta: float, n: int, stream: RandomStream
) -> float:
    """(1/n) Tr(lambda_eff I + (mu/N) G G^T)^(-1) for Gaussian G with N = round(n/delta)."""
    if n < 100:
        raise ValueError("need n >= 100 for a stable Wishart estimate")
    if lambda_eff <= 0 or delta <= 0 or mu < 0:
        raise ValueError("need lambda_eff > 0, delta > 0 and mu >= 0")
    if mu == 0:
        return 1.0 / lambda_eff
    cols = max(int(round(n / delta)), 1)
    gauss = stream.standard_normal(n, cols)
    wishart = gauss @ gauss.T * (mu / cols)
    wishart = 0.5 * (wishart + wishart.T)
    system = SpdSystem(wishart + lambda_eff * np.eye(n))
    return spd_trace_inverse(system) / n
