"""Learning curves of inner-product kernel ridge regression on the sqrt(d)-sphere.

The library predicts training and test error exactly in the polynomial
scaling regime n ~ delta * d^K / K! (through a Marchenko-Pastur-type fixed
point), extracts the kernel and teacher expansion coefficients that feed the
formulas, and validates everything against seeded finite-size simulations.
"""

from .coefficients import (
    CoefficientTable,
    KernelSpec,
    TeacherSpec,
    alpha_finite_quadrature,
    alpha_limit_hermite,
    build_table,
    mu_finite_quadrature,
    mu_finite_rodrigues,
    mu_limit_from_taylor,
    random_feature_profile,
)
from .harness import (
    ExperimentConfig,
    SweepRow,
    figure_recipe,
    parse_config,
    run_sweep,
    write_output,
)
from .linalg import SpdSystem, SymmetricTridiagonal, spd_solve, spd_trace_inverse, symtri_eigen
from .orthopoly import (
    QuadratureRule,
    UltrasphericalBasis,
    build_ultraspherical,
    gauss_rule_gaussian,
    gauss_rule_sphere_marginal,
    harmonic_dimension,
    hermite_eval,
    sphere_marginal_moment,
    ultraspherical_eval,
    ultraspherical_eval_matrix,
)
from .rng import RandomStream, draw_standard_normal, make_stream
from .simulate import (
    Dataset,
    EmpiricalRun,
    KrrFit,
    empirical_train_error,
    gaussian_equivalent_run,
    kernel_gram,
    kernel_trial,
    krr_fit,
    make_dataset,
    sample_sphere,
    test_error_mc,
    test_error_semianalytic,
    wishart_stieltjes_mc,
)
from .theory import (
    PerturbedPoint,
    Prediction,
    Regime,
    bias_variance,
    gamma_limit,
    perturbed_stieltjes,
    predict,
    ridgeless_limit,
    stieltjes_derivative_at_zero,
    stieltjes_mp,
    theta,
)

__version__ = "0.1.0"
