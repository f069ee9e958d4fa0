"""Sparse Gaussian graphical model estimation with horseshoe shrinkage.

Single networks are fitted with an expectation conditional maximisation
scheme; several related networks can be fitted jointly, sharing edge
evidence through common latent variables while keeping network-specific
scales. The package also ships the matching simulator, global-scale
selection, recovery metrics, and a Bayesian-bootstrap suitability check.
"""

from .model import (
    DEFAULT_EDGE_THRESHOLD,
    Dataset,
    GraphEstimate,
    LatentSummary,
    digamma_half_integer,
    extract_graph,
    marginal_objective,
    objective_value,
    partial_correlations,
)
from .ecm import EcmConfig, EcmFit, cm_lambda, cm_tau_update, cm_theta_column, e_step_single, fit_single
from .joint import JointFit, JointProblem, cm_lambda_joint, e_step_joint, fit_joint
from .tau import TauGrid, TauSelection, aic_score, fit_to_edge_count, select_tau, select_taus
from .simulate import TrueModel, build_precision, generate_scale_free_graph, make_true_model, perturb_graph, sample_gaussian
from .metrics import cutoff_pr_curve, edge_disagreement, precision_recall
from .bootstrap import BootstrapReport, bootstrap_edge_check, weighted_scatter

__all__ = [
    "DEFAULT_EDGE_THRESHOLD",
    "Dataset",
    "GraphEstimate",
    "LatentSummary",
    "digamma_half_integer",
    "extract_graph",
    "marginal_objective",
    "objective_value",
    "partial_correlations",
    "EcmConfig",
    "EcmFit",
    "cm_lambda",
    "cm_tau_update",
    "cm_theta_column",
    "e_step_single",
    "fit_single",
    "JointFit",
    "JointProblem",
    "cm_lambda_joint",
    "e_step_joint",
    "fit_joint",
    "TauGrid",
    "TauSelection",
    "aic_score",
    "fit_to_edge_count",
    "select_tau",
    "select_taus",
    "TrueModel",
    "build_precision",
    "generate_scale_free_graph",
    "make_true_model",
    "perturb_graph",
    "sample_gaussian",
    "cutoff_pr_curve",
    "edge_disagreement",
    "precision_recall",
    "BootstrapReport",
    "bootstrap_edge_check",
    "weighted_scatter",
]

__version__ = "0.1.0"
