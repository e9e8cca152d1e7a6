"""Weighted rate-distortion solvers for two-receiver common-layer coding:
alternating-minimization for finite alphabets and closed forms for bivariate
Gaussian sources."""

from .model import (
    CodingDistribution,
    DegenerateInputError,
    DimensionMismatchError,
    DistortionSpec,
    JointPmf,
    Multipliers,
    ReproductionPrior,
    Weights,
    d_max,
    discretize_gaussian,
    dsbs,
    expected_distortions,
    hamming_distortion,
    load_source,
    rate_triple,
    validate,
)
from .ba import (
    BaConfig,
    BaState,
    FeasibilityError,
    FTriple,
    KtCertificate,
    default_prior,
    kt_check,
    lagrangian_p,
    lagrangian_pq,
    lower_bound_value,
    minimize_lagrangian,
    mu_sums,
)
from .solver import (
    SWEEP_CSV_HEADER,
    OuterConfig,
    RdResult,
    rd_from_multipliers,
    solve_rd,
    sweep,
)
from .gaussian import (
    CertificateBundle,
    ClassificationError,
    GaussianSolution,
    GaussianSpec,
    RegimeError,
    certificate,
    classify_region,
    f_alpha,
    find_root_m,
    nu_values,
    rate_triple_gaussian,
    solve_gaussian_rd,
    special_case_rd,
    tradeoff_rows,
    wyner_ci,
    wyner_corner,
)

__all__ = [
    "BaConfig",
    "BaState",
    "CertificateBundle",
    "ClassificationError",
    "CodingDistribution",
    "DegenerateInputError",
    "DimensionMismatchError",
    "DistortionSpec",
    "FTriple",
    "FeasibilityError",
    "GaussianSolution",
    "GaussianSpec",
    "JointPmf",
    "KtCertificate",
    "Multipliers",
    "OuterConfig",
    "RdResult",
    "RegimeError",
    "ReproductionPrior",
    "SWEEP_CSV_HEADER",
    "Weights",
    "certificate",
    "classify_region",
    "d_max",
    "default_prior",
    "discretize_gaussian",
    "dsbs",
    "expected_distortions",
    "f_alpha",
    "find_root_m",
    "hamming_distortion",
    "kt_check",
    "lagrangian_p",
    "lagrangian_pq",
    "load_source",
    "lower_bound_value",
    "minimize_lagrangian",
    "mu_sums",
    "nu_values",
    "rate_triple",
    "rate_triple_gaussian",
    "rd_from_multipliers",
    "solve_gaussian_rd",
    "solve_rd",
    "special_case_rd",
    "sweep",
    "tradeoff_rows",
    "wyner_ci",
    "wyner_corner",
]

__version__ = "0.1.0"
