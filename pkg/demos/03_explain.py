"""Explain which tile regions drive a malicious verdict.

Run from the repository root (trains a small model first):

    python3 demos/03_explain.py
"""

import numpy as np

from tracelens import henet, imaging
from tracelens.explain import explain_tile, render_heatmap
from tracelens.synthgen import SynthProfile, gen_trace

cfg = henet.PipelineConfig(m=28)

traces = []
for i in range(8):
    raw, _ = gen_trace(SynthProfile(kind="benign", length=6 * 784, seed=500 + i))
    traces.append((f"b{i}", raw, 0))
for i in range(8):
    raw, _ = gen_trace(SynthProfile(kind="malicious", length=6 * 784,
                                    burst_rate=0.3, seed=600 + i))
    traces.append((f"m{i}", raw, 1))

tiles, _ = henet.build_tile_dataset(traces, cfg)
# k-nearest-neighbor probabilities move in visible steps when regions are
# masked, which makes for a readable heatmap
model = henet.henet_train(tiles, "knn", {"k": 7}, seed=0, cfg=cfg)

# Pick the highest-scoring tile of one malicious trace.
raw, truth = gen_trace(SynthProfile(kind="malicious", length=6 * 784,
                                    burst_rate=0.3, seed=700))
candidates = henet.trace_to_tiles(raw, cfg)
features = henet.tile_features(raw, cfg)
from tracelens.models import predict_proba_batch

scores = predict_proba_batch(model.tile_model, features)[:, 1]
worst = int(np.argmax(scores))
tile = candidates[worst]
print(f"tile {tile.index} scores p(malicious) = {scores[worst]:.3f}")

# Fit the local surrogate: 1000 random region masks, kernel-weighted
# ridge regression, one weight per 7x7 region of the 4x4 grid.
ex = explain_tile(model, tile, g=4, samples=1000, seed=7)
grid = ex.weights.reshape(4, 4)
print("region weights (positive pushes toward malicious):")
for row in grid:
    print("  " + "  ".join(f"{w:+.4f}" for w in row))

heatmap = render_heatmap(tile, ex)
imaging.write_netpbm(heatmap, "demo_heatmap.ppm")
print("heatmap written to demo_heatmap.ppm (green = malicious evidence, red = benign)")
