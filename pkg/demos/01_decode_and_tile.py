"""Decode a synthetic trace and turn it into image tiles.

Run from the repository root:

    python3 demos/01_decode_and_tile.py
"""

from collections import Counter

from tracelens import imaging, ptcodec
from tracelens.synthgen import SynthProfile, gen_trace

# A benign trace: TNT runs alternating with pool-addressed TIP packets.
raw, truth = gen_trace(SynthProfile(kind="benign", length=4 * 784, seed=3))
print(f"trace: {len(raw)} bytes, ground truth kind = {truth.kind}")

report = ptcodec.decode_stream(raw, mode="strict")
counts = Counter(p.kind.value for p in report.packets)
print("packet mix:", dict(counts))

# The first few packets, the way `tracelens decode` would list them.
for p in report.packets[:5]:
    detail = ""
    if p.branch_bits:
        detail = " bits=" + "".join("T" if b else "N" for b in p.branch_bits)
    elif p.kind in ptcodec.TIP_KINDS:
        detail = f" payload={p.payload.hex()}"
    print(f"  offset {p.byte_offset:5d}  {p.kind.value}{detail}")

# Control-flow payload bytes become the pixel stream; 28x28 segments
# become grayscale tiles (a trailing partial segment is dropped).
pixels = imaging.pixels_from_packets(report.packets)
batch = imaging.slice_tiles(pixels, m=28, tail_policy="drop")
print(f"{len(pixels)} pixels -> {batch.n} tiles of 28x28")

tile = batch.tiles[0]
imaging.write_netpbm(tile, "demo_tile.pgm")
print(f"tile 1 written to demo_tile.pgm "
      f"(min={tile.values.min()}, max={tile.values.max()})")
