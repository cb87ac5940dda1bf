"""Gaussian naive Bayes."""

from __future__ import annotations

import numpy as np

from .core import LabeledDataset, TrainedModel

VAR_FLOOR = 1e-9  # keeps constant features from zeroing a variance


def train(hyper: dict, train_set: LabeledDataset, seed: int):
    X, y, C = train_set.features, train_set.labels, train_set.num_classes
    d = train_set.dim
    means = np.zeros((C, d))
    variances = np.ones((C, d))
    priors = np.zeros(C)
    for c in range(C):
        Xc = X[y == c]
        priors[c] = len(Xc) / len(X)
        if len(Xc):
            means[c] = Xc.mean(axis=0)
            variances[c] = np.maximum(Xc.var(axis=0), VAR_FLOOR)
    params = {"means": means, "variances": variances, "priors": priors}
    return params, dict(hyper)


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    means = model.params["means"]
    variances = model.params["variances"]
    priors = model.params["priors"]
    C = model.num_classes
    log_post = np.empty((len(X), C))
    for c in range(C):
        diff = X - means[c]
        ll = -0.5 * (np.log(2.0 * np.pi * variances[c]) + diff**2 / variances[c]).sum(axis=1)
        log_post[:, c] = ll + (np.log(priors[c]) if priors[c] > 0 else -np.inf)
    log_post -= log_post.max(axis=1, keepdims=True)
    p = np.exp(log_post)
    return p / p.sum(axis=1, keepdims=True)
