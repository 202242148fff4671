"""Covariate-dependent Gaussian graphical models via Bayesian edge regression.

Off-diagonal precision elements are modeled as linear functions of
subject-level covariates under a Normal-Gamma shrinkage prior, sampled with
a Metropolis-within-Gibbs scheme, and summarized into covariate-specific
graphs by posterior-probability thresholding under Bayesian FDR control.
"""

from .model import (
    Dataset,
    DiagPrecision,
    EdgeCoefficients,
    EdgeId,
    LocalScales,
    ShrinkageHyper,
    cpf_evaluate,
    edge_from_index,
    edge_index,
    edge_pairs,
    n_edges,
    partial_correlation,
    predict_precision,
    standardize_columns,
)
from .distributions import GigParams, gig_log_density, sample_gig, sample_mvn
from .inference import (
    GraphEstimate,
    PosteriorDraws,
    compute_ppi,
    fdr_select,
    geweke_diagnostic,
    pd_audit,
    predict_graph,
    rho_at,
)
from .sampler import (
    ChainConfig,
    ChainResult,
    SamplerState,
    compute_m_s,
    purity_selectors,
    run_chain,
)
from .simulate import (
    GroundTruth,
    build_sim1,
    build_sim2,
    encode_groups,
    generate_dataset,
    mix_expressions,
    purity_covariates,
)
from .evaluate import bauc, confusion, roc_sweep

__version__ = "0.1.0"
