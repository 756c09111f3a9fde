"""Multivariate gamma distributions: transforms, densities, sampling and checks."""

from .density import (
    chi2_lt,
    empirical_lt,
    factorial_pdf_mc,
    mvgamma_lt,
    noncentral_mvgamma_lt,
    sample_mvgamma,
)
from .exceptions import (
    MVGammaError,
    NotPositiveDefiniteError,
    QuadratureError,
    SeriesConvergenceError,
    ShapeParameterError,
)
from .linalg import (
    CovMatrix,
    FactorialForm,
    Partition,
    det_block_factorization,
    find_signature_m_matrix,
    lambda_factorial_decomposition,
    partition_blocks,
    sylvester_identity,
)
from .montecarlo import MCEstimate, RngSeed
from .scalar_gamma import (
    ShapeParam,
    central_gamma_pdf,
    mv_gamma_fn,
    noncentral_gamma_pdf,
    scaled_noncentral_gamma_pdf,
)
from .verify import (
    AdmissibilityInfo,
    admissibility_bound,
    inequality_check,
    positivity_probe,
    rhs_lt_closed,
    rhs_lt_mc,
    theorem1_rhs_pdf,
)
from .wishart import half_wishart_log_pdf, sample_wishart

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityInfo",
    "CovMatrix",
    "FactorialForm",
    "MCEstimate",
    "MVGammaError",
    "NotPositiveDefiniteError",
    "Partition",
    "QuadratureError",
    "RngSeed",
    "SeriesConvergenceError",
    "ShapeParam",
    "ShapeParameterError",
    "admissibility_bound",
    "central_gamma_pdf",
    "chi2_lt",
    "det_block_factorization",
    "empirical_lt",
    "factorial_pdf_mc",
    "find_signature_m_matrix",
    "half_wishart_log_pdf",
    "inequality_check",
    "lambda_factorial_decomposition",
    "mv_gamma_fn",
    "mvgamma_lt",
    "noncentral_gamma_pdf",
    "noncentral_mvgamma_lt",
    "partition_blocks",
    "positivity_probe",
    "rhs_lt_closed",
    "rhs_lt_mc",
    "sample_mvgamma",
    "sample_wishart",
    "scaled_noncentral_gamma_pdf",
    "sylvester_identity",
    "theorem1_rhs_pdf",
]
