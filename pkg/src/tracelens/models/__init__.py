"""Desk-scale classifiers and dimensionality reduction.

All models train deterministically from an explicit seed and are
immutable once trained; predict_proba always returns a probability
vector over the C classes.
"""

from .core import (
    DimensionMismatch,
    EmptyDataset,
    LabeledDataset,
    SingleClassDataset,
    TrainedModel,
    WrongKind,
    predict_proba,
    predict_proba_batch,
    train_classifier,
)
from .nn import nn_gradient_check
from .pca import PcaModel, pca_fit, pca_transform, pca_inverse_transform
from .serialize import CorruptModelFile, UnsupportedVersion, load_model, save_model

__all__ = [
    "LabeledDataset",
    "TrainedModel",
    "PcaModel",
    "train_classifier",
    "predict_proba",
    "predict_proba_batch",
    "nn_gradient_check",
    "pca_fit",
    "pca_transform",
    "pca_inverse_transform",
    "save_model",
    "load_model",
    "DimensionMismatch",
    "EmptyDataset",
    "SingleClassDataset",
    "WrongKind",
    "UnsupportedVersion",
    "CorruptModelFile",
]
