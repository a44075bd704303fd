"""Desk-scale laboratory for label-noise robust training: two-stage noise
detection, pseudo-loss weighted correction and a confidence-guided
contrastive objective."""

__version__ = "0.1.0"

from .datagen import Dataset, make_blobs, inject_id_noise, inject_ood_noise
from .gmm import GmmFit, fit_gmm_1d, posterior_low
from .metrics import accuracy, auc
from .model import MlpClassifier, ProjectionHead, init_model
from .training import TrainConfig, TrainReport, run_training

__all__ = [
    "__version__",
    "Dataset", "make_blobs", "inject_id_noise", "inject_ood_noise",
    "GmmFit", "fit_gmm_1d", "posterior_low",
    "accuracy", "auc",
    "MlpClassifier", "ProjectionHead", "init_model",
    "TrainConfig", "TrainReport", "run_training",
]
