"""Train a tile classifier and score held-out traces.

Run from the repository root:

    python3 demos/02_train_and_score.py
"""

from tracelens import henet
from tracelens.synthgen import SynthProfile, gen_trace

cfg = henet.PipelineConfig(m=28)


def make_traces(kind, rho, n, seed0):
    out = []
    for i in range(n):
        profile = SynthProfile(kind=kind, length=8 * 784, burst_rate=rho, seed=seed0 + i)
        raw, _ = gen_trace(profile)
        out.append((f"{kind}_{i}", raw, 1 if kind == "malicious" else 0))
    return out


train_traces = make_traces("benign", 0.0, 10, seed0=100) + \
    make_traces("malicious", 0.3, 10, seed0=200)
test_traces = make_traces("benign", 0.0, 5, seed0=300) + \
    make_traces("malicious", 0.3, 5, seed0=400)

# Every 28x28 tile inherits its trace's label; provenance remembers which
# trace and tile index each feature row came from.
tiles, provenance = henet.build_tile_dataset(train_traces, cfg)
print(f"{len(tiles)} training tiles from {len(train_traces)} traces "
      f"(first row: {provenance[0]})")

# Gaussian naive Bayes trains instantly and is a solid baseline at this
# corpus size; swap in "nn" with more traces for the full pipeline.
model = henet.henet_train(tiles, "gnb", {}, seed=42, cfg=cfg)

# The trace verdict averages per-tile malicious probabilities (threshold 0.5).
hits = 0
for trace_id, raw, label in test_traces:
    verdict = henet.henet_score_trace(model, raw)
    want = "malicious" if label else "benign"
    hits += verdict.label == want
    print(f"  {trace_id:13s} mean={verdict.mean_score:.3f} "
          f"-> {verdict.label:9s} (truth: {want})")
print(f"trace accuracy: {hits}/{len(test_traces)}")

henet.save_henet(model, "demo_model.json")
print("model saved to demo_model.json")
