"""Dataset manifests, splits, metrics, and the classifier comparison table.

The binary positive class is "malicious" throughout: FPR = FP / (FP+TN),
TPR = TP / (TP+FN). Multiclass rates are macro (unweighted one-vs-rest)
averages.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

from . import henet, models

LABELS = ("benign", "malicious")


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicatePath(ValueError):
    def __init__(self, line: int, path: str):
        super().__init__(f"line {line}: duplicate path {path!r}")
        self.line = line


class ClassTooSmall(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    path: str
    label: str
    split: str = ""


@dataclass(frozen=True)
class Manifest:
    rows: tuple[ManifestRow, ...]
    labels: tuple[str, ...] = LABELS

    def __len__(self) -> int:
        return len(self.rows)

    def label_index(self, row: ManifestRow) -> int:
        return self.labels.index(row.label)


HEADER = "path,label,split"


def load_manifest(path) -> Manifest:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != HEADER:
        raise ParseError(1, f"expected header {HEADER!r}")
    rows = []
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(lineno, f"expected 3 columns, got {len(parts)}")
        p, label, split = parts
        if label not in LABELS:
            raise ParseError(lineno, f"unknown label {label!r}")
        if split not in ("", "train", "test"):
            raise ParseError(lineno, f"unknown split {split!r}")
        if p in seen:
            raise DuplicatePath(lineno, p)
        seen.add(p)
        rows.append(ManifestRow(path=p, label=label, split=split))
    return Manifest(rows=tuple(rows))


def save_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(HEADER + "\n")
        for row in manifest.rows:
            f.write(f"{row.path},{row.label},{row.split}\n")


def split(manifest: Manifest, test_fraction: float, seed: int,
          stratified: bool = True) -> tuple[Manifest, Manifest]:
    """Deterministic disjoint train/test partition.

    Stratified mode shuffles and splits within each class so per-class
    proportions are preserved within one sample.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    rows = manifest.rows
    test_idx: set[int] = set()
    if stratified:
        for label in manifest.labels:
            idx = [i for i, r in enumerate(rows) if r.label == label]
            if not idx:
                continue
            if len(idx) < 2:
                raise ClassTooSmall(f"class {label!r} has {len(idx)} sample(s)")
            perm = rng.permutation(len(idx))
            n_test = int(round(len(idx) * test_fraction))
            n_test = min(max(n_test, 1), len(idx) - 1)
            test_idx.update(idx[perm[j]] for j in range(n_test))
    else:
        perm = rng.permutation(len(rows))
        n_test = int(round(len(rows) * test_fraction))
        n_test = min(max(n_test, 1), len(rows) - 1)
        test_idx.update(int(perm[j]) for j in range(n_test))
    train_rows = tuple(r for i, r in enumerate(rows) if i not in test_idx)
    test_rows = tuple(r for i, r in enumerate(rows) if i in test_idx)
    return (
        Manifest(rows=train_rows, labels=manifest.labels),
        Manifest(rows=test_rows, labels=manifest.labels),
    )


@dataclass(frozen=True)
class Metrics:
    confusion: np.ndarray  # (C, C), rows = true class, cols = predicted
    accuracy: float
    fpr: np.ndarray  # per-class one-vs-rest
    tpr: np.ndarray
    fpr_macro: float
    tpr_macro: float
    f1: float


def compute_metrics(predicted, true, num_classes: int) -> Metrics:
    predicted = np.asarray(predicted, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if predicted.shape != true.shape:
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(true)} labels")
    C = num_classes
    confusion = np.zeros((C, C), dtype=np.int64)
    for t, p in zip(true, predicted):
        confusion[t, p] += 1
    total = confusion.sum()
    accuracy = float(np.trace(confusion)) / total if total else 0.0
    fpr = np.zeros(C)
    tpr = np.zeros(C)
    f1_per = np.zeros(C)
    for c in range(C):
        tp = confusion[c, c]
        fn = confusion[c].sum() - tp
        fp = confusion[:, c].sum() - tp
        tn = total - tp - fn - fp
        fpr[c] = fp / (fp + tn) if fp + tn else 0.0
        tpr[c] = tp / (tp + fn) if tp + fn else 0.0
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tpr[c]
        f1_per[c] = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    # binary convention: positive class is "malicious" (index 1)
    f1 = float(f1_per[1]) if C == 2 else float(f1_per.mean())
    return Metrics(
        confusion=confusion,
        accuracy=accuracy,
        fpr=fpr,
        tpr=tpr,
        fpr_macro=float(fpr.mean()),
        tpr_macro=float(tpr.mean()),
        f1=f1,
    )


def binary_metrics(metrics: Metrics) -> tuple[float, float]:
    """(FPR, TPR) with malicious (class 1) as the positive class."""
    return float(metrics.fpr[1]), float(metrics.tpr[1])


@dataclass(frozen=True)
class ModelSpec:
    """One comparison-table row: classifier kind plus optional PCA front end."""

    name: str
    kind: str
    hyper: dict = field(default_factory=dict)
    pca_rank: int = 0  # 0 disables the PCA front end


def _resolution_string(cfg: henet.PipelineConfig, spec: ModelSpec) -> str:
    side = cfg.m // cfg.pool_factor if cfg.pool_factor else cfg.m
    if spec.pca_rank:
        return f"{side}^2 -> {spec.pca_rank}"
    return f"{side}x{side}x{cfg.channels}"


@dataclass(frozen=True)
class TableRow:
    name: str
    accuracy: float
    fpr: float
    tpr: float
    f1: float
    resolution: str


def _read_trace(data_dir: str, row: ManifestRow) -> bytes:
    with open(os.path.join(data_dir, row.path), "rb") as f:
        return f.read()


def evaluate_config(spec: ModelSpec, train_tiles: models.LabeledDataset,
                    test_traces, cfg: henet.PipelineConfig, seed: int) -> TableRow:
    """Train one tile model and score the held-out traces with it.

    ``test_traces`` is a sequence of (features_matrix, true_label) pairs,
    features precomputed per trace with the shared pipeline config.
    """
    tiles = train_tiles
    pca = None
    if spec.pca_rank:
        pca = models.pca_fit(train_tiles.features, spec.pca_rank)
        tiles = models.LabeledDataset(
            models.pca_transform(pca, train_tiles.features),
            train_tiles.labels,
            train_tiles.num_classes,
        )
    tile_model = models.train_classifier(spec.kind, spec.hyper, tiles, seed)
    predictions, truths = [], []
    for features, label in test_traces:
        feats = models.pca_transform(pca, features) if pca else features
        proba = models.predict_proba_batch(tile_model, feats)[:, 1]
        mean = float(np.mean(proba))
        predictions.append(1 if mean >= cfg.threshold else 0)
        truths.append(label)
    metrics = compute_metrics(predictions, truths, 2)
    fpr, tpr = binary_metrics(metrics)
    return TableRow(
        name=spec.name,
        accuracy=metrics.accuracy,
        fpr=fpr,
        tpr=tpr,
        f1=metrics.f1,
        resolution=_resolution_string(cfg, spec),
    )


DEFAULT_SPECS = (
    ModelSpec("henet-nn", "nn", {"hidden": 16, "epochs": 30}),
    ModelSpec("3-nearest-neighbor", "knn", {"k": 3}),
    ModelSpec("3-nearest-neighbor+pca", "knn", {"k": 3}, pca_rank=32),
    ModelSpec("naive-bayes", "gnb"),
    ModelSpec("random-forest+pca", "rf", {"trees": 20, "max_depth": 8}, pca_rank=32),
)


def benchmark_table(specs, manifest: Manifest, data_dir: str,
                    cfg: henet.PipelineConfig, seed: int,
                    test_fraction: float = 0.2) -> list[TableRow]:
    """Evaluate every config on the identical stratified split and seed."""
    train_m, test_m = split(manifest, test_fraction, seed, stratified=True)
    train_traces = [
        (row.path, _read_trace(data_dir, row), train_m.label_index(row))
        for row in train_m.rows
    ]
    train_tiles, _ = henet.build_tile_dataset(train_traces, cfg)
    test_traces = []
    for row in test_m.rows:
        raw = _read_trace(data_dir, row)
        test_traces.append((henet.tile_features(raw, cfg), test_m.label_index(row)))
    return [evaluate_config(spec, train_tiles, test_traces, cfg, seed) for spec in specs]


def table_to_csv(rows) -> str:
    out = io.StringIO()
    out.write("name,accuracy,fpr,tpr,f1,resolution\n")
    for r in rows:
        out.write(
            f"{r.name},{r.accuracy:.4f},{r.fpr:.4g},{r.tpr:.4f},{r.f1:.4f},{r.resolution}\n"
        )
    return out.getvalue()


def table_to_text(rows) -> str:
    headers = ("name", "accuracy", "fpr", "tpr", "f1", "resolution")
    cells = [headers] + [
        (r.name, f"{r.accuracy:.4f}", f"{r.fpr:.4g}", f"{r.tpr:.4f}", f"{r.f1:.4f}", r.resolution)
        for r in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"
