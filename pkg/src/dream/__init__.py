"""Smooth covariate effects in relational event models, one subnet per effect.

Pipeline: simulate (or load) a directed event stream, draw nested
case-control pairs, fit per-covariate GCU subnets on the pairwise
logistic partial likelihood with Adam, then summarize bootstrap refits
with a Gaussian-process posterior to get mean curves and bands.
"""

from .backend import ACTIVE_BACKEND
from .covariates import CovariateProvider, CovariateSpec
from .effects import EffectSpec
from .errors import DreamError
from .events import (
    Event,
    EventSequence,
    RiskSet,
    StatState,
    apply_event,
    endogenous_covariates,
)
from .gpr import CurveEnsemble, CurveGrid, GprFit, confidence_bands, gpr_posterior, rbf_kernel
from .nam import NamModel, SubnetSpec, forward, gcu, gcu_grad, preset_spec
from .sampling import CaseControlDataset, sample_controls
from .scoring import curve_rmse, kl_pop_vs_model, log_partial_likelihood
from .simulate import SimConfig, TruthHandle, draw_nodal_covariates, simulate_events
from .training import TrainConfig, bootstrap_refits, k_fold_cv, train

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "CaseControlDataset",
    "CovariateProvider",
    "CovariateSpec",
    "CurveEnsemble",
    "CurveGrid",
    "DreamError",
    "EffectSpec",
    "Event",
    "EventSequence",
    "GprFit",
    "NamModel",
    "RiskSet",
    "SimConfig",
    "StatState",
    "SubnetSpec",
    "TrainConfig",
    "TruthHandle",
    "apply_event",
    "bootstrap_refits",
    "confidence_bands",
    "curve_rmse",
    "draw_nodal_covariates",
    "endogenous_covariates",
    "forward",
    "gcu",
    "gcu_grad",
    "gpr_posterior",
    "k_fold_cv",
    "kl_pop_vs_model",
    "log_partial_likelihood",
    "preset_spec",
    "rbf_kernel",
    "sample_controls",
    "simulate_events",
    "train",
]
