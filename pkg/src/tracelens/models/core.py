"""Shared dataset type, training dispatch, and prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class EmptyDataset(ValueError):
    pass


class SingleClassDataset(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class WrongKind(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (n, d) with integer class labels in [0, C)."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] == 0:
            raise ValueError(f"features must be a nonempty 2-D matrix, got {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("features and labels must have equal length")
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if len(y) and (y.min() < 0 or y.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class TrainedModel:
    """Immutable trained classifier: kind in {knn, gnb, rf, nn}."""

    kind: str
    hyper: dict
    params: dict = field(repr=False)
    dim: int = 0
    num_classes: int = 0
    seed: int = 0


def _check_dataset(train: LabeledDataset) -> None:
    if len(train) == 0:
        raise EmptyDataset("training set is empty")
    if len(np.unique(train.labels)) < 2:
        raise SingleClassDataset("training requires at least 2 classes present")


def train_classifier(kind: str, hyper: dict, train: LabeledDataset, seed: int) -> TrainedModel:
    """Train a classifier; deterministic for fixed (kind, hyper, data, seed)."""
    _check_dataset(train)
    from . import forest, gnb, knn, nn

    trainers = {
        "knn": knn.train,
        "gnb": gnb.train,
        "rf": forest.train,
        "nn": nn.train,
    }
    if kind not in trainers:
        raise WrongKind(f"unknown classifier kind {kind!r}")
    params, hyper_used = trainers[kind](hyper, train, seed)
    return TrainedModel(
        kind=kind,
        hyper=hyper_used,
        params=params,
        dim=train.dim,
        num_classes=train.num_classes,
        seed=seed,
    )


def predict_proba_batch(model: TrainedModel, X) -> np.ndarray:
    """Probability matrix (n, C) for a batch of feature vectors."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"expected dimension {model.dim}, got {X.shape[1]}")
    from . import forest, gnb, knn, nn

    predictors = {
        "knn": knn.predict_proba,
        "gnb": gnb.predict_proba,
        "rf": forest.predict_proba,
        "nn": nn.predict_proba,
    }
    return predictors[model.kind](model, X)


def predict_proba(model: TrainedModel, v) -> np.ndarray:
    """Probability vector (length C) for a single feature vector."""
    return predict_proba_batch(model, np.asarray(v, dtype=np.float64)[np.newaxis, :])[0]


def predict_label(model: TrainedModel, v) -> int:
    return int(np.argmax(predict_proba(model, v)))
