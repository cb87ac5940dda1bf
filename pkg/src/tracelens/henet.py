"""End-to-end trace scoring pipeline.

Trace bytes are decoded leniently, control-flow payloads become a pixel
stream, the stream is tiled, each tile is scored by the tile model, and
the per-tile malicious-class probabilities p_1..p_n are averaged into a
trace verdict (malicious iff mean >= threshold).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import imaging, models, ptcodec
from .models.serialize import (
    FORMAT_VERSION,
    CorruptModelFile,
    UnsupportedVersion,
    model_from_doc,
    model_to_doc,
)


class NoTilesProduced(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    m: int = 28
    tail_policy: str = "drop"
    tip_family: bool = False
    channels: int = 1
    pool_factor: int | None = None
    threshold: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def feature_dim(self) -> int:
        side = self.m // self.pool_factor if self.pool_factor else self.m
        return side * side * self.channels


@dataclass(frozen=True)
class HenetModel:
    pipeline: PipelineConfig
    tile_model: models.TrainedModel
    malicious_class: int = 1

    def __post_init__(self):
        if self.tile_model.dim != self.pipeline.feature_dim:
            raise ValueError(
                f"tile model dimension {self.tile_model.dim} does not match "
                f"pipeline feature dimension {self.pipeline.feature_dim}"
            )


@dataclass(frozen=True)
class TraceVerdict:
    tile_probabilities: tuple[float, ...]
    mean_score: float
    label: str  # "benign" | "malicious"
    n: int

    def to_json_line(self, trace_id: str, include_tiles: bool = False) -> str:
        doc = {
            "trace": trace_id,
            "n": self.n,
            "mean_score": float(f"{self.mean_score:.17g}"),
            "label": self.label,
        }
        if include_tiles:
            doc["tile_probabilities"] = list(self.tile_probabilities)
        return json.dumps(doc)


def trace_to_tiles(raw: bytes, cfg: PipelineConfig) -> list[imaging.ImageTile]:
    """Decode -> pixels -> tiles -> optional pooling / channel replication."""
    report = ptcodec.decode_stream(raw, mode="lenient")
    x = imaging.pixels_from_packets(report.packets, tip_family=cfg.tip_family)
    try:
        batch = imaging.slice_tiles(x, cfg.m, cfg.tail_policy)
    except imaging.EmptyInput as err:
        raise NoTilesProduced(str(err)) from err
    if batch.n == 0:
        raise NoTilesProduced(f"trace yields {len(x)} pixels, fewer than one {cfg.m}x{cfg.m} tile")
    tiles = list(batch.tiles)
    if cfg.pool_factor:
        tiles = [imaging.pool_downscale(t, cfg.pool_factor) for t in tiles]
    if cfg.channels == 3:
        tiles = [imaging.replicate_channels(t) for t in tiles]
    return tiles


def tile_features(raw: bytes, cfg: PipelineConfig) -> np.ndarray:
    return np.stack([imaging.normalize(t) for t in trace_to_tiles(raw, cfg)])


def build_tile_dataset(traces, cfg: PipelineConfig):
    """Per-tile dataset with label inheritance from the source trace.

    ``traces`` is a sequence of (trace_id, raw_bytes, label) with label in
    {0, 1}. Returns (LabeledDataset, provenance) where provenance[i] is
    the (trace_id, k) pair of feature row i.
    """
    rows, labels, provenance = [], [], []
    for trace_id, raw, label in traces:
        try:
            feats = tile_features(raw, cfg)
        except NoTilesProduced:
            continue
        for k, row in enumerate(feats, start=1):
            rows.append(row)
            labels.append(label)
            provenance.append((trace_id, k))
    if not rows:
        raise NoTilesProduced("no trace produced a single tile")
    dataset = models.LabeledDataset(np.stack(rows), np.asarray(labels), num_classes=2)
    return dataset, provenance


def henet_train(tiles: models.LabeledDataset, kind: str, hyper: dict, seed: int,
                cfg: PipelineConfig, malicious_class: int = 1) -> HenetModel:
    tile_model = models.train_classifier(kind, hyper, tiles, seed)
    return HenetModel(pipeline=cfg, tile_model=tile_model, malicious_class=malicious_class)


def aggregate(tile_probabilities, threshold: float) -> TraceVerdict:
    """Average p_1..p_n in ascending order and apply the decision threshold.

    The fixed accumulation order keeps the mean bitwise-deterministic even
    when tile inference ran in parallel.
    """
    p = [float(v) for v in tile_probabilities]
    if not p:
        raise NoTilesProduced("cannot aggregate zero tile probabilities")
    acc = 0.0
    for v in sorted(p):
        acc += v
    mean = acc / len(p)
    label = "malicious" if mean >= threshold else "benign"
    return TraceVerdict(tile_probabilities=tuple(p), mean_score=mean, label=label, n=len(p))


def score_tiles(model: HenetModel, features: np.ndarray) -> TraceVerdict:
    proba = models.predict_proba_batch(model.tile_model, features)
    return aggregate(proba[:, model.malicious_class], model.pipeline.threshold)


def henet_score_trace(model: HenetModel, raw: bytes) -> TraceVerdict:
    return score_tiles(model, tile_features(raw, model.pipeline))


def save_henet(model: HenetModel, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "henet",
        "pipeline": {
            "m": model.pipeline.m,
            "tail_policy": model.pipeline.tail_policy,
            "tip_family": model.pipeline.tip_family,
            "channels": model.pipeline.channels,
            "pool_factor": model.pipeline.pool_factor,
            "threshold": model.pipeline.threshold,
        },
        "malicious_class": model.malicious_class,
        "tile_model": model_to_doc(model.tile_model),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)
        f.write("\n")


def load_henet(path) -> HenetModel:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CorruptModelFile(path, err.pos, err.msg) from err
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {version!r} (supported: {FORMAT_VERSION})")
    if doc.get("kind") != "henet":
        raise CorruptModelFile(path, 0, f"expected kind 'henet', got {doc.get('kind')!r}")
    try:
        tile_model = model_from_doc(doc["tile_model"], path)
        cfg = PipelineConfig(**doc["pipeline"])
        return HenetModel(
            pipeline=cfg,
            tile_model=tile_model,
            malicious_class=int(doc["malicious_class"]),
        )
    except (KeyError, TypeError) as err:
        raise CorruptModelFile(path, 0, str(err)) from err
