"""Lossless JSON persistence for trained models.

Reals are serialized as Python's shortest round-tripping decimal text, so
a load(save(m)) round trip reproduces bitwise-identical predictions.
"""

from __future__ import annotations

import json

import numpy as np

from .core import TrainedModel
from .pca import PcaModel

FORMAT_VERSION = 1


class UnsupportedVersion(ValueError):
    pass


class CorruptModelFile(ValueError):
    def __init__(self, path, offset: int, reason: str):
        super().__init__(f"{path}: corrupt model file at byte {offset}: {reason}")
        self.offset = offset


def _to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def model_to_doc(model) -> dict:
    if isinstance(model, PcaModel):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "pca",
            "hyper": {},
            "params": {
                "mean": model.mean.tolist(),
                "components": model.components.tolist(),
                "explained_variance": model.explained_variance.tolist(),
                "rank_deficient": model.rank_deficient,
            },
            "d": model.dim,
            "C": 0,
            "seed": 0,
        }
    elif isinstance(model, TrainedModel):
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": model.kind,
            "hyper": _to_jsonable(model.hyper),
            "params": _to_jsonable(model.params),
            "d": model.dim,
            "C": model.num_classes,
            "seed": model.seed,
        }
    else:
        raise TypeError(f"cannot save object of type {type(model).__name__}")
    return doc


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_doc(model), f)
        f.write("\n")


_ARRAY_PARAMS = {
    "knn": {"X", "y"},
    "gnb": {"means", "variances", "priors"},
    "nn": {"W1", "b1", "W2", "b2"},
    "rf": set(),
}


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CorruptModelFile(path, err.pos, err.msg) from err
    return model_from_doc(doc, path)


def model_from_doc(doc, path="<document>"):
    if not isinstance(doc, dict):
        raise CorruptModelFile(path, 0, "top level is not an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {version!r} (supported: {FORMAT_VERSION})")
    try:
        kind = doc["kind"]
        params = doc["params"]
        if kind == "pca":
            return PcaModel(
                mean=np.asarray(params["mean"], dtype=np.float64),
                components=np.asarray(params["components"], dtype=np.float64),
                explained_variance=np.asarray(params["explained_variance"], dtype=np.float64),
                rank_deficient=bool(params["rank_deficient"]),
            )
        if kind not in _ARRAY_PARAMS:
            raise KeyError(f"unknown model kind {kind!r}")
        restored = {}
        for name, value in params.items():
            if name in _ARRAY_PARAMS[kind]:
                dtype = np.int64 if name == "y" else np.float64
                restored[name] = np.asarray(value, dtype=dtype)
            else:
                restored[name] = value
        return TrainedModel(
            kind=kind,
            hyper=doc["hyper"],
            params=restored,
            dim=int(doc["d"]),
            num_classes=int(doc["C"]),
            seed=int(doc["seed"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, (UnsupportedVersion, CorruptModelFile)):
            raise
        raise CorruptModelFile(path, 0, str(err)) from err
