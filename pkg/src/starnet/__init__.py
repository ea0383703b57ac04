"""Probit network autoregression with role-based simultaneous dependence.

Dynamic binary networks are modelled as thresholded latent Gaussians whose
mean depends on covariates and lagged network statistics, and whose
within-time covariance comes from sender, receiver and reciprocal-pair
random effects. Fitting is by mean-field variational Bayes.
"""
from .errors import NumericalError, StarError, ValidationError
from .model import ModelParams, PriorSet, StarModelSpec, UndirectedModelParams
from .netcore import CovariateTensor, DynamicNetwork
from .simulate import SimConfig, sim_study_truth, simulate_star
from .vb import FitOptions, FitReport, fit

__all__ = [
    "CovariateTensor",
    "DynamicNetwork",
    "FitOptions",
    "FitReport",
    "ModelParams",
    "NumericalError",
    "PriorSet",
    "SimConfig",
    "StarError",
    "StarModelSpec",
    "UndirectedModelParams",
    "ValidationError",
    "fit",
    "sim_study_truth",
    "simulate_star",
]
