"""Skew Gaussian decomposable graphical models.

Library and CLI for the SGDG model: decomposable-graph machinery, the
closed-skew-normal distribution layer, exact model sampling, a block Gibbs
sampler under three prior regimes with propriety gates, and Bayes-factor
comparison against the Gaussian graphical baseline.
"""

from .csn import (
    CsnParams,
    SingularBlock,
    UnsupportedCovarianceStructure,
    csn_conditional,
    csn_log_density,
    sample_csn,
    sample_truncated_normal,
)
from .evidence import EvidenceEstimate, NotConverged, bayes_factor, estimate_log_marginal
from .graph import (
    EliminationOrdering,
    Graph,
    NotDecomposable,
    is_decomposable,
    perfect_elimination_ordering,
    separates,
    verify_ordering,
)
from .inference import (
    GibbsState,
    IndependentProperPrior,
    NoninformativePrior,
    PatternWishartPrior,
    ProprietyViolation,
    Trace,
    check_propriety,
    resolve_hyperparams,
    run_chain,
    summarize,
)
from .linalg import (
    CholFactor,
    NotPositiveDefinite,
    assemble_precision,
    modified_cholesky,
    solve_unit_triangular,
    verify_pattern,
)
from .model import (
    ReparamParams,
    SgdgParams,
    ci_factorization_check,
    covariance_matrix,
    mean_vector,
    reparam_forward,
    reparam_inverse,
    sample_sgdg,
    sgdg_log_density,
    to_csn,
)

__version__ = "0.1.0"
