"""Acceptance gate: one test per release criterion.

Each test emits a single ``ACCEPTANCE <n>: PASS|FAIL`` line; the lines
are collected in RESULTS and echoed in the terminal summary (see
conftest.py) so the gate's verdict survives pytest's output capture. The
thresholds below are release criteria; they must not be weakened.
"""

import functools
import json
import random
import time
from pathlib import Path

import numpy as np
import pytest

from tracelens import harness, henet, imaging, models, ptcodec
from tracelens.cli import run_cli
from tracelens.explain import explain_tile
from tracelens.imaging import ImageTile, PixelArray, slice_tiles
from tracelens.models import (
    LabeledDataset,
    load_model,
    nn_gradient_check,
    pca_fit,
    pca_inverse_transform,
    pca_transform,
    predict_proba_batch,
    save_model,
    train_classifier,
)

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).parent / "golden"


RESULTS: list[str] = []


def criterion(n, title):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                RESULTS.append(f"ACCEPTANCE {n}: FAIL - {title}")
                raise
            RESULTS.append(f"ACCEPTANCE {n}: PASS - {title}")
        return wrapper
    return deco


@pytest.fixture(scope="module")
def quickstart(tmp_path_factory):
    """The documented quickstart, run through the CLI exactly as written."""
    root = tmp_path_factory.mktemp("quickstart")
    data = root / "data"
    assert run_cli([
        "synth", "--benign", "100", "--malicious", "100",
        "--seed", "42", "--out", str(data), "--length", "50000",
    ]) == 0
    csv_path = root / "comparison_table.csv"
    started = time.monotonic()
    assert run_cli([
        "eval", "--data", str(data), "--seed", "42", "--out", str(csv_path),
    ]) == 0
    elapsed = time.monotonic() - started
    return data, csv_path, elapsed


@criterion(1, "published headline numbers are cited, not reproduced")
def test_published_number_status():
    readme = (ROOT / "README.md").read_text()
    # the published results must appear as citations...
    assert "0.98" in readme and "0.0073" in readme
    # ...alongside an explicit statement that they are out of reach here
    assert "not reproduc" in readme.lower()


@criterion(2, "seed-42 synthetic benchmark: HeNet-nn >= 0.95, averaging helps, "
              "naive Bayes strictly below")
def test_synthetic_benchmark(quickstart):
    data, csv_path, elapsed = quickstart
    assert elapsed < 180.0, f"benchmark took {elapsed:.0f}s, budget is 180s"

    rows = {line.split(",")[0]: line.split(",")
            for line in csv_path.read_text().splitlines()[1:]}
    nn_acc = float(rows["henet-nn"][1])
    gnb_acc = float(rows["naive-bayes"][1])
    assert nn_acc >= 0.95
    assert gnb_acc < nn_acc

    # trace-level accuracy must not fall below tile-level accuracy on the
    # identical split (the averaging benefit of the ensemble step)
    manifest = harness.load_manifest(data / "manifest.csv")
    cfg = henet.PipelineConfig(m=28)
    train_m, test_m = harness.split(manifest, 0.2, 42)

    def read(row):
        return (data / row.path).read_bytes()

    train_traces = [(r.path, read(r), train_m.label_index(r)) for r in train_m.rows]
    tiles, _ = henet.build_tile_dataset(train_traces, cfg)
    model = henet.henet_train(tiles, "nn", {"hidden": 16, "epochs": 30}, 42, cfg)

    tile_hits = tile_total = trace_hits = 0
    for r in test_m.rows:
        label = test_m.label_index(r)
        feats = henet.tile_features(read(r), cfg)
        proba = predict_proba_batch(model.tile_model, feats)
        tile_hits += int((proba.argmax(axis=1) == label).sum())
        tile_total += len(feats)
        verdict = henet.score_tiles(model, feats)
        trace_hits += int(verdict.label == ("malicious" if label else "benign"))
    tile_acc = tile_hits / tile_total
    trace_acc = trace_hits / len(test_m.rows)
    assert abs(trace_acc - nn_acc) < 1e-12  # same model the table evaluated
    assert trace_acc >= tile_acc


@criterion(3, "codec round-trip over 1e5 sequences; lenient decode consumes 1e6 fuzz bytes")
def test_codec_round_trip_and_fuzz():
    rnd = random.Random(1234)
    kinds = list(ptcodec.IP_BYTES_LEN)

    def random_packet():
        c = rnd.randrange(6)
        if c == 0:
            return ptcodec.short_tnt([rnd.random() < 0.5 for _ in range(rnd.randint(1, 6))])
        if c == 1:
            return ptcodec.long_tnt([rnd.random() < 0.5 for _ in range(rnd.randint(1, 47))])
        if c == 2:
            code = rnd.choice(kinds)
            payload = bytes(rnd.randrange(256) for _ in range(ptcodec.IP_BYTES_LEN[code]))
            kind = rnd.choice(sorted(ptcodec.TIP_KINDS, key=lambda k: k.value))
            return ptcodec.tip(kind, code, payload)
        return ptcodec.Packet(
            [ptcodec.PacketKind.PSB, ptcodec.PacketKind.PSBEND, ptcodec.PacketKind.PAD][c - 3]
        )

    sequences = 0
    packets = 0
    while sequences < 100_000:
        seq = [random_packet() for _ in range(rnd.randint(0, 4))]
        raw = ptcodec.encode_stream(seq)
        decoded = ptcodec.decode_stream(raw, "strict").packets
        assert len(decoded) == len(seq)
        assert all(a.same_value(b) for a, b in zip(decoded, seq))
        sequences += 1
        packets += len(seq)
    assert sequences >= 100_000

    fuzz = bytes(rnd.randrange(256) for _ in range(1_000_000))
    report = ptcodec.decode_stream(fuzz, "lenient")
    assert report.bytes_consumed == len(fuzz)


@criterion(4, "slicing law n == floor(L / m^2) under the drop policy")
def test_slicing_law():
    rnd = random.Random(99)
    cases = [(rnd.randint(1, 20_000), rnd.randint(1, 64)) for _ in range(200)]
    for m in (1, 5, 28):
        seg = m * m
        cases += [(max(1, seg - 1), m), (seg, m)]
        for k in (1, 2, 7):
            cases += [(k * seg - 1, m), (k * seg, m), (k * seg + 1, m)]
    for L, m in cases:
        if L < 1:  # the empty stream is rejected, not sliced
            continue
        batch = slice_tiles(PixelArray(bytes(L)), m, "drop")
        assert batch.n == L // (m * m), (L, m)


@criterion(5, "nn gradient check < 1e-4 on 20 random small instances")
def test_nn_gradient_checks():
    rng = np.random.default_rng(2024)
    for trial in range(20):
        d = int(rng.integers(2, 17))
        hidden = int(rng.integers(1, 9))
        n = int(rng.integers(4, 12))
        X = rng.normal(size=(n, d))
        y = np.concatenate([[0, 1], rng.integers(0, 2, n - 2)])
        ds = LabeledDataset(X, y, 2)
        model = train_classifier("nn", {"hidden": hidden, "epochs": int(rng.integers(0, 4))},
                                 ds, int(trial))
        assert nn_gradient_check(model, ds) < 1e-4


@criterion(6, "PCA orthonormality 1e-8, oracle agreement 1e-6, MSE nonincreasing")
def test_pca_against_oracle():
    from test_models_pca import align_signs, oracle_components

    rng = np.random.default_rng(55)
    for trial in range(20):
        n = int(rng.integers(4, 13))
        d = int(rng.integers(2, 9))
        r = int(rng.integers(1, min(n, d) + 1))
        X = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0, size=d)
        model = pca_fit(X, r)
        G = model.components @ model.components.T
        assert np.abs(G - np.eye(model.rank)).max() < 1e-8
        comps, vals = oracle_components(X, model.rank)
        aligned = align_signs(model.components, comps)
        assert np.abs(model.components - aligned).max() < 1e-6
        assert np.abs(model.explained_variance - vals).max() < 1e-6

    X = rng.normal(size=(30, 8)) @ np.diag(np.linspace(2.0, 0.1, 8))
    prev = np.inf
    for r in range(1, 9):
        model = pca_fit(X, r)
        recon = pca_inverse_transform(model, pca_transform(model, X))
        mse = float(((X - recon) ** 2).mean())
        assert mse <= prev + 1e-12
        prev = mse


@criterion(7, "kNN exactly matches the exhaustive-sort oracle on 200 queries")
def test_knn_oracle_equivalence():
    from test_models_classifiers import knn_oracle

    rng = np.random.default_rng(77)
    mismatches = 0
    for batch in range(4):
        d = int(rng.integers(2, 8))
        X = np.round(rng.normal(size=(50, d)), 1)  # coarse grid forces distance ties
        y = np.concatenate([[0, 1, 2], rng.integers(0, 3, 47)])
        ds = LabeledDataset(X, y, 3)
        k = int(rng.integers(1, 8))
        model = train_classifier("knn", {"k": k}, ds, 0)
        Q = np.round(rng.normal(size=(50, d)), 1)
        got = predict_proba_batch(model, Q)
        for i, q in enumerate(Q):
            if not (got[i] == knn_oracle(X, y, k, 3, q)).all():
                mismatches += 1
    assert mismatches == 0


@criterion(8, "explainer recovers a planted linear model (Spearman >= 0.9); "
              "constant model yields zero weights")
def test_explainer_recovery():
    from test_explain import region_means, spearman

    g, m = 4, 28
    rng = np.random.default_rng(8)
    planted = rng.normal(size=g * g)

    def model(batch):
        return np.array([region_means(row, g, m) @ planted for row in batch])

    tile = ImageTile(rng.integers(50, 220, (m, m), dtype=np.uint8))
    ex = explain_tile(model, tile, g=g, samples=2000, seed=31, baseline="zero")
    assert spearman(ex.weights, planted) >= 0.9

    constant = lambda batch: np.full(len(batch), 0.42)
    ex0 = explain_tile(constant, tile, g=g, samples=2000, seed=31)
    assert np.abs(ex0.weights).max() <= 1e-6


@criterion(9, "metrics fixture: accuracy 0.85, FPR 0.2, TPR 0.9 exactly")
def test_metrics_fixture():
    true = [1] * 10 + [0] * 10
    pred = [1] * 9 + [0] + [0] * 8 + [1] * 2
    metrics = harness.compute_metrics(pred, true, 2)
    fpr, tpr = harness.binary_metrics(metrics)
    assert metrics.accuracy == 0.85
    assert fpr == 0.2
    assert tpr == 0.9


@criterion(10, "golden files: comparison CSV, PGM/PPM exports, model round-trip")
def test_determinism_and_golden_files(quickstart, tmp_path):
    _, csv_path, _ = quickstart
    assert csv_path.read_bytes() == (GOLDEN / "comparison_table.csv").read_bytes()

    # PGM/PPM goldens regenerate from their documented small corpus
    data = tmp_path / "data"
    assert run_cli(["synth", "--benign", "4", "--malicious", "4",
                    "--seed", "9", "--out", str(data), "--length", "4000"]) == 0
    pgm = tmp_path / "tile_1.pgm"
    assert run_cli(["export-image", "--in", str(data / "benign_0000.pt"),
                    "--m", "28", "--k", "1", "--out", str(pgm)]) == 0
    assert pgm.read_bytes() == (GOLDEN / "tile_1.pgm").read_bytes()

    model_path = tmp_path / "model.json"
    assert run_cli(["train", "--data", str(data), "--kind", "gnb",
                    "--seed", "42", "--out", str(model_path)]) == 0
    ppm = tmp_path / "heatmap.ppm"
    assert run_cli(["explain", "--model", str(model_path),
                    "--trace", str(data / "malicious_0000.pt"),
                    "--tile-index", "1", "--seed", "7", "--out", str(ppm)]) == 0
    assert ppm.read_bytes() == (GOLDEN / "heatmap.ppm").read_bytes()

    # save/load round-trips to bitwise-equal predictions for every kind
    rng = np.random.default_rng(123)
    ds = LabeledDataset(rng.normal(size=(40, 6)),
                        np.concatenate([[0, 1], rng.integers(0, 2, 38)]), 2)
    Q = rng.normal(size=(15, 6))
    for kind, hyper in (("knn", {"k": 3}), ("gnb", {}),
                        ("rf", {"trees": 5, "max_depth": 4}),
                        ("nn", {"hidden": 4, "epochs": 5})):
        model = train_classifier(kind, hyper, ds, 3)
        path = tmp_path / f"{kind}.json"
        save_model(model, path)
        assert (predict_proba_batch(model, Q)
                == predict_proba_batch(load_model(path), Q)).all()
