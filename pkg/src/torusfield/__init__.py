"""Gaussian random fields on the unit torus: spectral measures, exact
covariances with certified truncation bounds, samplers, kernel checks and
regularity diagnostics."""

from .covariance import (
    TruncationBudget,
    canonical_asymptotics_check,
    canonical_cov_closed_1d,
    canonical_cov_heat,
    canonical_cov_series_1d,
    canonical_matern_conv_term,
    canonical_matern_cov_conv,
    convolution_structure_check,
    matern_kernel,
    periodized_matern_cov,
    spectral_cov,
    spectral_cov_grid,
)
from .errors import (
    BudgetError,
    DimensionMismatchError,
    DivergenceError,
    FamilyMismatchError,
    PreconditionError,
    SymmetryError,
    TorusFieldError,
    WeightError,
)
from .kernels import (
    KernelProbe,
    SymbolClassSpec,
    kernel_eval,
    verify_holder_growth,
    verify_singularity_bound,
)
from .regularity import (
    HolderExponentEstimator,
    RegularityPrediction,
    VariogramEstimate,
    empirical_variogram,
    holder_exponent_estimate,
    regularity_report,
)
from .sampler import (
    GridField,
    discrete_canonical_measure,
    discrete_convergence_report,
    discrete_laplacian_eigenvalue,
    sample_field,
)
from .spectral import (
    CovarianceModel,
    NoSolution,
    SPDESolution,
    SpectralMeasure,
    Symbol,
    TailDecay,
    apply_symbol_to_measure,
    canonical_matern_weight,
    canonical_measure,
    canonical_weight,
    matern_measure,
    matern_spectral_weight,
    matern_symbol,
    measure_from_model,
    slow_growth_certificate,
    solve_spde_measure,
    white_noise_measure,
)

__version__ = "0.1.0"
