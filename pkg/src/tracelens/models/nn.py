"""Shallow neural network: input -> tanh hidden layer -> softmax.

Trained with mini-batch SGD on cross-entropy loss. Initialization is the
seeded uniform Glorot scheme in [-sqrt(6/(fan_in+fan_out)), +...]; with
epochs = 0 the seeded initialization is returned untouched.
"""

from __future__ import annotations

import numpy as np

from .core import LabeledDataset, TrainedModel, WrongKind

DEFAULTS = {"hidden": 16, "epochs": 50, "learning_rate": 0.03, "batch_size": 32}


def _init_params(d: int, hidden: int, C: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (d + hidden))
    lim2 = np.sqrt(6.0 / (hidden + C))
    return {
        "W1": rng.uniform(-lim1, lim1, size=(d, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-lim2, lim2, size=(hidden, C)),
        "b2": np.zeros(C),
    }


def _forward(params: dict, X: np.ndarray):
    H = np.tanh(X @ params["W1"] + params["b1"])
    logits = H @ params["W2"] + params["b2"]
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    return H, e / e.sum(axis=1, keepdims=True)


def _loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray, C: int):
    """Mean cross-entropy over the batch and its parameter gradients."""
    n = len(X)
    H, P = _forward(params, X)
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    loss = -np.log(np.maximum(P[np.arange(n), y], 1e-300)).mean()
    dlogits = (P - onehot) / n
    dW2 = H.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dH = dlogits @ params["W2"].T
    dpre = dH * (1.0 - H**2)
    dW1 = X.T @ dpre
    db1 = dpre.sum(axis=0)
    return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def train(hyper: dict, train_set: LabeledDataset, seed: int):
    h = {**DEFAULTS, **hyper}
    if h["hidden"] < 1 or h["epochs"] < 0 or h["learning_rate"] <= 0 or h["batch_size"] < 1:
        raise ValueError("nn needs hidden >= 1, epochs >= 0, learning_rate > 0, batch_size >= 1")
    X, y, C = train_set.features, train_set.labels, train_set.num_classes
    params = _init_params(train_set.dim, h["hidden"], C, seed)
    rng = np.random.default_rng([seed, 1])
    lr = h["learning_rate"]
    for _ in range(h["epochs"]):
        order = rng.permutation(len(X))
        for start in range(0, len(X), h["batch_size"]):
            idx = order[start : start + h["batch_size"]]
            _, grads = _loss_and_grads(params, X[idx], y[idx], C)
            for name in params:
                params[name] = params[name] - lr * grads[name]
    return params, h


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    _, P = _forward(model.params, X)
    return P


def nn_gradient_check(model: TrainedModel, batch: LabeledDataset, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop and central-difference gradients."""
    if model.kind != "nn":
        raise WrongKind(f"gradient check requires an nn model, got {model.kind!r}")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    X, y, C = batch.features, batch.labels, batch.num_classes
    params = {k: v.copy() for k, v in model.params.items()}
    _, grads = _loss_and_grads(params, X, y, C)
    worst = 0.0
    for name, w in params.items():
        flat = w.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            lp, _ = _loss_and_grads(params, X, y, C)
            flat[i] = orig - epsilon
            lm, _ = _loss_and_grads(params, X, y, C)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            analytic = grads[name].reshape(-1)[i]
            denom = max(abs(analytic), abs(numeric), 1e-12)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
