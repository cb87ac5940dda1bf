"""Random forest with Gini splits, bootstrap sampling, and seeded determinism.

Trees are stored as flat node lists. Split ties are broken by the lowest
feature index, then the lowest threshold, so training is reproducible.
"""

from __future__ import annotations

import numpy as np

from .core import LabeledDataset, TrainedModel

DEFAULTS = {"trees": 50, "max_depth": 12, "min_samples_split": 2, "bootstrap": True}


def _gini_best_split(X, y, C, feature_ids):
    """Best (feature, threshold, weighted-gini) over candidate features."""
    n = len(y)
    best = None  # (impurity, feature, threshold)
    onehot = np.zeros((n, C))
    onehot[np.arange(n), y] = 1.0
    for f in sorted(feature_ids):
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        # candidate split positions: between distinct consecutive values
        distinct = np.nonzero(sv[1:] > sv[:-1])[0]
        if len(distinct) == 0:
            continue
        counts_left = np.cumsum(onehot[order], axis=0)
        total = counts_left[-1]
        nl = (distinct + 1).astype(np.float64)
        nr = n - nl
        cl = counts_left[distinct]
        cr = total - cl
        gini_l = 1.0 - (cl**2).sum(axis=1) / nl**2
        gini_r = 1.0 - (cr**2).sum(axis=1) / nr**2
        weighted = (nl * gini_l + nr * gini_r) / n
        i = int(np.argmin(weighted))
        thr = 0.5 * (sv[distinct[i]] + sv[distinct[i] + 1])
        cand = (float(weighted[i]), f, float(thr))
        if best is None or cand[0] < best[0] - 1e-15:
            best = cand
        elif abs(cand[0] - best[0]) <= 1e-15:
            # lower feature index wins, then lower threshold
            if (cand[1], cand[2]) < (best[1], best[2]):
                best = cand
    return best


def _grow_tree(X, y, C, rng, max_depth, min_samples_split, n_features):
    nodes = []

    def leaf(idx):
        counts = np.bincount(y[idx], minlength=C).astype(np.float64)
        nodes.append({"dist": (counts / counts.sum()).tolist()})
        return len(nodes) - 1

    def grow(idx, depth):
        if (
            depth >= max_depth
            or len(idx) < min_samples_split
            or len(np.unique(y[idx])) == 1
        ):
            return leaf(idx)
        feats = rng.choice(X.shape[1], size=n_features, replace=False)
        best = _gini_best_split(X[idx], y[idx], C, feats)
        if best is None:
            return leaf(idx)
        _, f, thr = best
        mask = X[idx, f] <= thr
        node_id = len(nodes)
        nodes.append({"feature": int(f), "threshold": thr, "left": -1, "right": -1})
        nodes[node_id]["left"] = grow(idx[mask], depth + 1)
        nodes[node_id]["right"] = grow(idx[~mask], depth + 1)
        return node_id

    grow(np.arange(len(y)), 0)
    return nodes


def train(hyper: dict, train_set: LabeledDataset, seed: int):
    h = {**DEFAULTS, **hyper}
    if h["trees"] < 1 or h["max_depth"] < 1:
        raise ValueError("rf needs trees >= 1 and max_depth >= 1")
    X, y, C = train_set.features, train_set.labels, train_set.num_classes
    n, d = X.shape
    n_features = min(d, h.get("features_per_split") or max(1, int(np.sqrt(d))))
    trees = []
    for t in range(h["trees"]):
        rng = np.random.default_rng([seed, t])
        boot = rng.integers(0, n, size=n) if h["bootstrap"] else np.arange(n)
        trees.append(
            _grow_tree(
                X[boot], y[boot], C, rng, h["max_depth"], h["min_samples_split"], n_features
            )
        )
    return {"trees": trees}, h


def _tree_proba(nodes, X):
    out = np.empty((len(X), len(_first_leaf_dist(nodes))))
    for i, x in enumerate(X):
        node = nodes[0]
        while "dist" not in node:
            node = nodes[node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]]
        out[i] = node["dist"]
    return out


def _first_leaf_dist(nodes):
    for node in nodes:
        if "dist" in node:
            return node["dist"]
    raise ValueError("tree has no leaves")


def predict_proba(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    trees = model.params["trees"]
    acc = np.zeros((len(X), model.num_classes))
    for nodes in trees:
        acc += _tree_proba(nodes, X)
    return acc / len(trees)
