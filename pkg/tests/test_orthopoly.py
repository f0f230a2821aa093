import math

import numpy as np
import pytest

from spherekrr.orthopoly import (
    build_ultraspherical,
    gauss_rule_gaussian,
    gauss_rule_sphere_marginal,
    harmonic_dimension,
    hermite_coefficients,
    hermite_eval,
    hermite_limit_check,
    sphere_marginal_moment,
    ultraspherical_eval,
    ultraspherical_eval_matrix,
    ultraspherical_via_moments,
)


class TestHarmonicDimension:
    def test_low_degrees(self):
        assert harmonic_dimension(0, 10) == 1.0
        assert harmonic_dimension(1, 10) == 10.0
        assert harmonic_dimension(2, 10) == 54.0  # (d+2)(d-1)/2 at d=10

    @pytest.mark.parametrize("d", [3, 5, 10, 100])
    def test_quadratic_closed_form(self, d):
        assert harmonic_dimension(2, d) == (d + 2) * (d - 1) / 2

    def test_rejects_small_dimension(self):
        with pytest.raises(ValueError, match="dimension too small"):
            harmonic_dimension(2, 2)

    def test_large_arguments_do_not_overflow(self):
        value = harmonic_dimension(10, 100)
        assert np.isfinite(value) and value > 1e12


class TestSphereMarginalMoments:
    def test_odd_are_zero(self):
        assert sphere_marginal_moment(3, 10) == 0.0
        assert sphere_marginal_moment(7, 333) == 0.0

    def test_second_moment_is_one(self):
        for d in (3, 10, 1000):
            assert sphere_marginal_moment(2, d) == 1.0

    def test_fourth_moment(self):
        assert sphere_marginal_moment(4, 10) == pytest.approx(2.5, abs=1e-15)  # 3/(1+2/10)

    def test_gaussian_limit(self):
        # moments tend to the double factorials as d grows
        assert sphere_marginal_moment(6, 10**7) == pytest.approx(15.0, rel=1e-5)


class TestUltraspherical:
    def test_degree_one_is_identity(self):
        basis = build_ultraspherical(23, 3)
        assert ultraspherical_eval(basis, 1, 0.7) == pytest.approx(0.7, abs=1e-15)

    @pytest.mark.parametrize("d", [5, 10, 50])
    def test_degree_two_closed_form(self, d):
        basis = build_ultraspherical(d, 4)
        for x in (-1.0, 0.3, 1.0, math.sqrt(d)):
            expected = math.sqrt((d + 2) / (d - 1)) / math.sqrt(2) * (x * x - 1)
            assert ultraspherical_eval(basis, 2, x) == pytest.approx(expected, abs=1e-12)
        assert ultraspherical_eval(basis, 2, 1.0) == pytest.approx(0.0, abs=1e-14)
        assert ultraspherical_eval(basis, 2, -1.0) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("d", [5, 10, 50])
    def test_edge_value_is_sqrt_dimension(self, d):
        basis = build_ultraspherical(d, 10)
        for k in range(11):
            value = ultraspherical_eval(basis, k, math.sqrt(d))
            assert value == pytest.approx(math.sqrt(harmonic_dimension(k, d)), rel=1e-10)

    def test_matches_moment_gram_schmidt(self):
        for d, k, x in ((50, 3, 0.0), (10, 4, 1.3), (20, 2, -0.5), (12, 4, 2.0)):
            basis = build_ultraspherical(d, k)
            assert ultraspherical_eval(basis, k, x) == pytest.approx(
                ultraspherical_via_moments(d, k, x), abs=1e-10
            )

    def test_degree_beyond_basis_rejected(self):
        basis = build_ultraspherical(10, 3)
        with pytest.raises(ValueError, match="degree exceeds basis"):
            ultraspherical_eval(basis, 4, 0.0)

    def test_matrix_variant_flags_out_of_support(self):
        basis = build_ultraspherical(9, 2)
        inside = np.array([[0.0, 1.0], [1.0, 2.9]])
        values, flagged = ultraspherical_eval_matrix(basis, 2, inside)
        assert not flagged
        assert values.shape == inside.shape
        _, flagged = ultraspherical_eval_matrix(basis, 2, np.array([3.1]))
        assert flagged  # sqrt(9) = 3 support edge

    def test_quadrature_orthonormality(self):
        for d in (5, 10, 50):
            max_deg = 12
            rule = gauss_rule_sphere_marginal(d, max_deg + 20)
            basis = build_ultraspherical(d, max_deg)
            values = np.array(
                [ultraspherical_eval_matrix(basis, k, rule.nodes)[0] for k in range(max_deg + 1)]
            )
            gram = (values * rule.weights) @ values.T
            off = gram - np.diag(np.diag(gram))
            assert np.max(np.abs(off)) <= 1e-9
            assert np.max(np.abs(np.diag(gram) - 1)) <= 1e-9


class TestHermite:
    def test_first_values(self):
        assert hermite_eval(1, 2.0) == pytest.approx(2.0, abs=1e-15)
        assert hermite_eval(2, 0.0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
        assert hermite_eval(4, 0.0) == pytest.approx(3 / math.sqrt(24), abs=1e-14)

    def test_orthonormal_under_gaussian_rule(self):
        rule = gauss_rule_gaussian(40)
        values = np.array([hermite_eval(k, rule.nodes) for k in range(13)])
        gram = (values * rule.weights) @ values.T
        assert np.max(np.abs(gram - np.eye(13))) <= 1e-10

    def test_coefficients_match_eval(self):
        for k in (0, 1, 3, 6):
            coeffs = hermite_coefficients(k)
            x = 0.73
            assert np.polynomial.polynomial.polyval(x, coeffs) == pytest.approx(
                hermite_eval(k, x), abs=1e-12
            )


class TestQuadratureRules:
    def test_weights_sum_to_one(self):
        for rule in (gauss_rule_sphere_marginal(10, 30), gauss_rule_gaussian(20), gauss_rule_gaussian(1)):
            assert abs(rule.weights.sum() - 1.0) <= 1e-12
            assert np.all(rule.weights > 0)

    def test_nodes_symmetric(self):
        rule = gauss_rule_sphere_marginal(7, 25)
        assert np.allclose(rule.nodes, -rule.nodes[::-1], atol=0)

    def test_sphere_second_moment(self):
        rule = gauss_rule_sphere_marginal(10, 30)
        assert rule.integrate(lambda x: x * x) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_fourth_moment(self):
        rule = gauss_rule_gaussian(20)
        assert rule.integrate(lambda x: x**4) == pytest.approx(3.0, abs=1e-12)

    def test_gaussian_highest_exact_moment(self):
        for m in (5, 10, 15):
            rule = gauss_rule_gaussian(m)
            target = float(np.prod(np.arange(1, 2 * m - 2, 2)))  # (2m-3)!!
            assert rule.integrate(lambda x: x ** (2 * m - 2)) == pytest.approx(target, rel=1e-9)

    @pytest.mark.parametrize("d", [5, 17, 100])
    def test_sphere_moments_match_closed_form(self, d):
        rule = gauss_rule_sphere_marginal(d, 40)
        for m in range(13):
            assert rule.integrate(lambda x: x**m) == pytest.approx(
                sphere_marginal_moment(m, d), abs=1e-10 * max(1, sphere_marginal_moment(m, d))
            )


class TestHermiteLimit:
    def test_degree_one_exact(self):
        errors = hermite_limit_check([10, 100, 1000], 1, 1.7)
        assert np.all(errors == 0)

    def test_degree_two_monotone(self):
        errors = hermite_limit_check([10, 100, 1000], 2, 1.3)
        assert errors[0] > errors[1] > errors[2]

    def test_degree_four_rate(self):
        errors = hermite_limit_check([10**4], 4, 0.0)
        assert errors[0] <= 10.0 / 10**4
