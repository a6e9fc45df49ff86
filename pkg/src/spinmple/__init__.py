"""Joint maximum pseudolikelihood estimation for spin glasses with random couplings."""

__version__ = "0.1.0"

from .coupling import CouplingMatrix, DisorderSpec, build_coupling, matvec, operator_norm
from .estimator import (
    EstimationReport,
    ExistenceWitness,
    LocalFieldTransformer,
    PseudoLikelihoodEstimator,
    existence_check,
    mple_grid_oracle,
    mple_newton,
)
from .graph import InteractionGraph, VertexSubset, balanced_cut, gen_complete, gen_erdos_renyi, good_set
from .model import ModelParams, neg_hessian, pseudo_loglik, score, t_stat, t_tilde
from .sampler import exact_enumerate, sample_gibbs, sample_gibbs_batch

__all__ = [
    "CouplingMatrix",
    "DisorderSpec",
    "EstimationReport",
    "ExistenceWitness",
    "InteractionGraph",
    "LocalFieldTransformer",
    "ModelParams",
    "PseudoLikelihoodEstimator",
    "VertexSubset",
    "balanced_cut",
    "build_coupling",
    "exact_enumerate",
    "existence_check",
    "gen_complete",
    "gen_erdos_renyi",
    "good_set",
    "matvec",
    "mple_grid_oracle",
    "mple_newton",
    "neg_hessian",
    "operator_norm",
    "pseudo_loglik",
    "sample_gibbs",
    "sample_gibbs_batch",
    "score",
    "t_stat",
    "t_tilde",
]
