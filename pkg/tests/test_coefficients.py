import math

import numpy as np
import pytest

from spherekrr.coefficients import (
    KernelSpec,
    TeacherSpec,
    alpha_finite_quadrature,
    alpha_limit_hermite,
    auto_truncation,
    build_table,
    gaussian_moment,
    mu_finite_quadrature,
    mu_finite_rodrigues,
    mu_limit_from_taylor,
    named_activation,
    random_feature_profile,
    relu,
    teacher_energy_gaussian,
)
from spherekrr.orthopoly import hermite_eval

FIG1_KERNEL = KernelSpec.from_taylor([1.0, 1.0, 0.5, 1.0 / 30.0])
FIG1_TEACHER = TeacherSpec.polynomial([0.0, 1.0, 1.0, 0.5, 0.05], noise_sigma=0.5)

# Gaussian-moment oracle values for the quartic teacher x^4/20 + x^3/2 + x^2 + x
FIG1_ALPHAS = np.array([23 / 20, 5 / 2, 2.6 / math.sqrt(2), 3 / math.sqrt(6), 1.2 / math.sqrt(24)])


class TestKernelSpec:
    def test_taylor_value_at_one_is_sum(self):
        assert FIG1_KERNEL.value_at_one() == pytest.approx(1 + 1 + 0.5 + 1 / 30, abs=0)

    def test_polynomial_variant_expands_binomially(self):
        spec = KernelSpec.polynomial(1.0, 2)
        assert spec.taylor == (1.0, 2.0, 1.0)
        assert spec.evaluate(0.5) == pytest.approx(2.25)

    def test_profile_requires_bound(self):
        spec = KernelSpec.from_profile(lambda z: np.exp(z), bound=math.e)
        assert spec.evaluate(0.0) == pytest.approx(1.0)
        assert not spec.has_taylor

    def test_bound_violation_rejected(self):
        with pytest.raises(ValueError, match="declared bound"):
            KernelSpec.from_profile(lambda z: 10.0 * np.ones_like(z), bound=1.0)

    def test_derivatives_from_taylor(self):
        assert FIG1_KERNEL.derivative(0.0, 2) == pytest.approx(1.0)  # f'' (0) = 2 * (1/2)
        assert FIG1_KERNEL.derivative(0.0, 3) == pytest.approx(6 / 30)


class TestTeacherSpec:
    def test_growth_check_rejects_liar(self):
        with pytest.raises(ValueError, match="growth bound"):
            TeacherSpec.from_callable(lambda x: np.exp(np.abs(x)), growth_coeff=1.0, growth_power=1.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(ValueError, match="noise"):
            TeacherSpec.polynomial([0.0, 1.0], noise_sigma=-0.1)


class TestMuLimit:
    def test_fig1_taylor_coefficients(self):
        mu = mu_limit_from_taylor(FIG1_KERNEL, 3)
        assert np.allclose(mu, [1.0, 1.0, 0.5, 1 / 30], atol=0)

    def test_shifted_square(self):
        mu = mu_limit_from_taylor(KernelSpec.polynomial(1.0, 2), 4)
        assert np.allclose(mu, [1.0, 2.0, 1.0, 0.0, 0.0], atol=0)

    def test_linear(self):
        mu = mu_limit_from_taylor(KernelSpec.from_taylor([0.0, 1.0]), 3)
        assert np.allclose(mu, [0.0, 1.0, 0.0, 0.0], atol=0)

    def test_profile_rejected(self):
        spec = KernelSpec.from_profile(lambda z: np.cos(z), bound=1.0)
        with pytest.raises(ValueError, match="Taylor data"):
            mu_limit_from_taylor(spec, 2)


class TestMuFinite:
    def test_linear_kernel_exact(self):
        spec = KernelSpec.from_taylor([0.0, 1.0])
        for d in (5, 50, 500):
            mu = mu_finite_quadrature(spec, d, 3)
            assert mu[1] == pytest.approx(1.0, abs=1e-12)
            assert abs(mu[0]) < 1e-12 and abs(mu[2]) < 1e-12

    @pytest.mark.parametrize("d", [5, 10, 100])
    def test_square_kernel_closed_forms(self, d):
        spec = KernelSpec.from_taylor([0.0, 0.0, 1.0])
        mu = mu_finite_quadrature(spec, d, 3)
        assert mu[2] == pytest.approx((d - 1) / d, abs=1e-10)
        assert mu[0] == pytest.approx(1 / d, abs=1e-12)

    @pytest.mark.parametrize("d", [10, 100, 1000])
    def test_rodrigues_agrees_with_quadrature(self, d):
        for spec in (FIG1_KERNEL, KernelSpec.polynomial(0.5, 3)):
            by_quad = mu_finite_quadrature(spec, d, 6)
            by_rodrigues = mu_finite_rodrigues(spec, d, 6)
            assert np.allclose(by_quad, by_rodrigues, rtol=1e-8, atol=1e-10)

    def test_rodrigues_square_closed_form(self):
        spec = KernelSpec.from_taylor([0.0, 0.0, 1.0])
        for d in (7, 40):
            mu = mu_finite_rodrigues(spec, d, 2)
            assert mu[2] == pytest.approx((d - 1) / d, abs=1e-10)
            assert mu[0] == pytest.approx(1 / d, abs=1e-12)

    def test_rodrigues_needs_derivatives(self):
        spec = KernelSpec.from_profile(lambda z: np.cos(z), bound=1.0)
        with pytest.raises(ValueError, match="derivatives unavailable"):
            mu_finite_rodrigues(spec, 10, 2)

    def test_mass_completeness(self):
        total = FIG1_KERNEL.value_at_one()
        previous_gap = None
        for d in (10, 100, 1000):
            mu = mu_finite_quadrature(FIG1_KERNEL, d, 3)
            gap = total - float(np.sum(mu))
            assert abs(gap) <= 1e-9  # cubic profile: degrees 0..3 carry all mass at any d
            previous_gap = gap

    def test_convergence_rate_in_dimension(self):
        limit = mu_limit_from_taylor(FIG1_KERNEL, 3)
        err_small = np.abs(mu_finite_quadrature(FIG1_KERNEL, 100, 3) - limit)
        err_large = np.abs(mu_finite_quadrature(FIG1_KERNEL, 1000, 3) - limit)
        mask = err_small > 1e-13
        assert np.all(err_large[mask] <= err_small[mask] / 5)


class TestAlphaCoefficients:
    def test_identity_teacher(self):
        alpha = alpha_limit_hermite(TeacherSpec.polynomial([0.0, 1.0]), 4)
        assert np.allclose(alpha, [0.0, 1.0, 0.0, 0.0, 0.0], atol=1e-14)

    def test_constant_teacher(self):
        alpha = alpha_limit_hermite(TeacherSpec.polynomial([3.5]), 3)
        assert np.allclose(alpha, [3.5, 0.0, 0.0, 0.0], atol=1e-14)

    def test_fig1_oracle_values(self):
        alpha = alpha_limit_hermite(FIG1_TEACHER, 4)
        assert np.allclose(alpha, FIG1_ALPHAS, atol=1e-12)

    def test_quadrature_path_matches_exact_path(self):
        exact = alpha_limit_hermite(FIG1_TEACHER, 6)
        by_quad = alpha_limit_hermite(
            TeacherSpec.from_callable(FIG1_TEACHER.g, growth_coeff=3.0, growth_power=4.0), 6
        )
        assert np.allclose(exact, by_quad, atol=1e-10)

    def test_parseval_identity_for_quartic(self):
        alpha = alpha_limit_hermite(FIG1_TEACHER, 4)
        assert float(np.sum(alpha**2)) == pytest.approx(
            teacher_energy_gaussian(FIG1_TEACHER), abs=1e-10
        )

    def test_finite_d_linear(self):
        teacher = TeacherSpec.polynomial([0.0, 1.0])
        for d in (5, 77):
            alpha = alpha_finite_quadrature(teacher, d, 3)
            assert alpha[1] == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("d", [10, 100, 1000])
    def test_finite_d_square_closed_form(self, d):
        teacher = TeacherSpec.polynomial([0.0, 0.0, 1.0])
        alpha = alpha_finite_quadrature(teacher, d, 3)
        expected = math.sqrt(2.0) * math.sqrt((d - 1) / (d + 2))
        assert alpha[2] == pytest.approx(expected, abs=1e-10)

    def test_finite_d_converges_to_hermite(self):
        d = 1000
        alpha_d = alpha_finite_quadrature(FIG1_TEACHER, d, 4)
        assert np.max(np.abs(alpha_d - FIG1_ALPHAS)) <= 10.0 / d


class TestRandomFeatures:
    def test_linear_activation(self):
        spec = random_feature_profile(lambda x: np.asarray(x, dtype=float), 6)
        mu = np.array(spec.taylor)
        assert mu[1] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(np.delete(mu, 1))) < 1e-12

    def test_hermite_activation_is_pure_degree(self):
        spec = random_feature_profile(lambda x: hermite_eval(2, x), 6)
        mu = np.array(spec.taylor)
        assert mu[2] == pytest.approx(1.0, abs=1e-10)
        assert np.max(np.abs(np.delete(mu, 2))) < 1e-10

    def test_relu_constant_coefficient(self):
        spec = random_feature_profile(relu, 16)
        assert spec.taylor[0] == pytest.approx(1 / (2 * math.pi), abs=1e-10)

    def test_relu_profile_matches_arccosine_form(self):
        spec = random_feature_profile(relu, 20)
        for z in (-0.5, 0.0, 0.3, 0.5):
            closed = (math.sqrt(1 - z * z) + (math.pi - math.acos(z)) * z) / (2 * math.pi)
            assert float(spec.evaluate(z)) == pytest.approx(closed, abs=1e-6)

    def test_tanh_by_name(self):
        spec = random_feature_profile("tanh", 16)
        mu = np.array(spec.taylor)
        assert np.max(np.abs(mu[::2])) < 1e-12  # odd activation: even coefficients vanish
        assert mu[1] > 0.3

    def test_truncation_too_small_rejected(self):
        with pytest.raises(ValueError, match="truncation too small"):
            random_feature_profile(relu, 2)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown activation"):
            named_activation("swish")


class TestBuildTable:
    def test_fig1_effective_ridge(self):
        table = build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=1, ridge=1e-4, truncation=4)
        assert table.ridge_effective == pytest.approx(1e-4 + 0.5 + 1 / 30, abs=1e-15)

    def test_pure_degree_kernel_has_no_tail(self):
        kernel = KernelSpec.from_taylor([0.0, 0.0, 1.0])
        # degree-2 Hermite teacher, so no energy sits below the phase degree
        teacher = TeacherSpec.polynomial([-1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)])
        table = build_table(kernel, teacher, phase_K=2, ridge=0.1, truncation=5)
        assert table.ridge_effective == pytest.approx(0.1, abs=0)

    def test_fig1_teacher_tail_at_phase_two(self):
        table = build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=2, ridge=1e-4, truncation=5)
        assert table.tail_alpha_sq == pytest.approx(3 / 2 + 1.44 / 24, abs=1e-10)

    def test_missing_phase_mass_rejected(self):
        kernel = KernelSpec.from_taylor([1.0, 0.0, 1.0])  # no degree-1 mass
        with pytest.raises(ValueError, match="mu_K must be positive"):
            build_table(kernel, FIG1_TEACHER, phase_K=1, ridge=0.1, truncation=4)

    def test_unlearnable_low_degree_rejected(self):
        kernel = KernelSpec.from_taylor([1.0, 0.0, 1.0])  # no degree-1 mass
        with pytest.raises(ValueError, match="low degrees must be learnable"):
            build_table(kernel, FIG1_TEACHER, phase_K=2, ridge=0.1, truncation=5)

    def test_limit_table_mirrors_limit_columns(self):
        table = build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=1, ridge=1e-3,
                            truncation=4, delta_K=2.0)
        assert table.dimension_d == 0
        assert np.array_equal(table.mu_limit, table.mu_finite)
        assert table.delta[1] == 2.0

    def test_finite_table_reports_both_conventions(self):
        table = build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=2, ridge=1e-3,
                            truncation=5, d=30, n=450)
        assert table.delta[2] == pytest.approx(450 / table.harmonic_dims[2])
        assert table.delta_K_limit == pytest.approx(450 * 2 / 30**2)

    def test_parseval_bounds_hold(self):
        table = build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=1, ridge=1e-4,
                            truncation=4, d=50, n=100)
        assert float(np.sum(table.alpha_finite**2)) <= table.teacher_energy_sphere + 1e-9
        assert float(np.sum(table.mu_finite)) <= table.total_kernel_mass + 1e-9

    def test_auto_truncation_covers_quartic(self):
        assert auto_truncation(FIG1_TEACHER, 1) == 4
        assert auto_truncation(FIG1_TEACHER, 2) == 5
        assert auto_truncation(FIG1_TEACHER, 3) == 6

    def test_truncation_below_phase_rejected(self):
        with pytest.raises(ValueError, match="truncation below phase degree"):
            build_table(FIG1_KERNEL, FIG1_TEACHER, phase_K=3, ridge=1e-3, truncation=2)

    def test_zero_noise_permitted(self):
        teacher = TeacherSpec.polynomial([0.0, 1.0], noise_sigma=0.0)
        table = build_table(KernelSpec.from_taylor([0.0, 1.0]), teacher, phase_K=1,
                            ridge=1e-2, truncation=4)
        assert table.noise_sigma == 0.0


def test_gaussian_moment_values():
    assert gaussian_moment(0) == 1.0
    assert gaussian_moment(1) == 0.0
    assert gaussian_moment(4) == 3.0
    assert gaussian_moment(8) == 105.0
