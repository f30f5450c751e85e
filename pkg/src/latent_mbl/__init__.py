"""Latent-trajectory models for multivariate binary longitudinal data, fitted by blocked GEE."""

__version__ = "0.1.0"

from .data import MblDataset, SimDesign, load_dataset, save_dataset, simulate_general  # noqa: E402
from .gee import FitResult, fit, fit_beta_model, init_params  # noqa: E402
from .model import BetaCurveModel, ModelSpec, ParamVector, SharedCurvatureModel  # noqa: E402

__all__ = [
    "BetaCurveModel", "FitResult", "MblDataset", "ModelSpec", "ParamVector",
    "SharedCurvatureModel", "SimDesign", "fit", "fit_beta_model", "init_params",
    "load_dataset", "save_dataset", "simulate_general",
]
