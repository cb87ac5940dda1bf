"""Synthetic control-flow trace corpus with ground truth.

Benign traces alternate runs of short TNT packets (biased branch bits,
geometric run lengths) with TIP packets whose targets come from a small
pool of function-entry addresses inside one 1 MiB region, so payload
bytes carry low entropy. Malicious traces share the benign base but embed
bursts of TIP packets with uniform-random 48-bit targets interleaved with
1-2-bit TNT packets, mimicking gadget chains that scatter across the
address space. Every generated stream decodes strictly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from . import ptcodec
from .ptcodec import Packet, PacketKind
from .synthrng import SplitMix64

TNT_RUN_MEAN = 12.0
BENIGN_REGION_BITS = 20  # pool addresses share one 2^20 byte region
# high-valued region bytes give benign TIP payloads a byte-level signature
# that uniform-random gadget targets lack
BENIGN_REGION_BASE = 0x0000_5555_C5E0_0000


@dataclass(frozen=True)
class SynthProfile:
    kind: str = "benign"  # "benign" | "malicious"
    length: int = 50_000  # target pixel count
    p_taken: float = 0.7
    pool_size: int = 8
    burst_rate: float = 0.0  # fraction of pixels inside bursts
    burst_min: int = 64  # burst length bounds, in pixels
    burst_max: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("benign", "malicious"):
            raise ValueError(f"kind must be 'benign' or 'malicious', got {self.kind!r}")
        if self.kind == "benign" and self.burst_rate != 0.0:
            raise ValueError("benign profiles must have burst_rate 0")
        if not 0.0 <= self.p_taken <= 1.0 or not 0.0 <= self.burst_rate <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.length < 0 or self.pool_size < 1:
            raise ValueError("length must be >= 0 and pool_size >= 1")
        if not 1 <= self.burst_min <= self.burst_max:
            raise ValueError("need 1 <= burst_min <= burst_max")


@dataclass
class GroundTruth:
    kind: str
    seed: int
    pixel_length: int
    burst_byte_ranges: list[tuple[int, int]] = field(default_factory=list)
    burst_pixels: int = 0


def _benign_pool(rng: SplitMix64, size: int) -> list[int]:
    region = 1 << BENIGN_REGION_BITS
    return [BENIGN_REGION_BASE + rng.next_below(region) for _ in range(size)]


def _tnt_run(rng: SplitMix64, p_taken: float, max_bits: int) -> list[Packet]:
    """A geometric-length run of short TNT packets totalling >= 1 bit."""
    total = min(rng.next_geometric(TNT_RUN_MEAN), max_bits)
    packets = []
    while total > 0:
        nbits = min(total, 6)
        bits = [rng.next_bool(p_taken) for _ in range(nbits)]
        packets.append(ptcodec.short_tnt(bits))
        total -= nbits
    return packets


def _gadget_burst(rng: SplitMix64, budget: int) -> list[Packet]:
    """TIP packets at uniform 48-bit targets, threaded with tiny TNTs."""
    packets = []
    pixels = 0
    while pixels < budget:
        addr = rng.next_below(1 << 48)
        packets.append(ptcodec.tip(PacketKind.TIP, 4, addr.to_bytes(6, "little")))
        pixels += 6
        nbits = rng.next_range(1, 2)
        packets.append(ptcodec.short_tnt([rng.next_bool(0.5) for _ in range(nbits)]))
        pixels += 1
    return packets


def _pixel_count(packets) -> int:
    total = 0
    for p in packets:
        if p.kind is PacketKind.SHORT_TNT:
            total += 1
        elif p.kind is PacketKind.LONG_TNT:
            total += 6
        elif p.kind is PacketKind.TIP:
            total += len(p.payload)
    return total


def gen_trace(profile: SynthProfile) -> tuple[bytes, GroundTruth]:
    """Generate one trace; byte-identical across runs for a fixed profile."""
    rng = SplitMix64(profile.seed)
    pool = _benign_pool(rng, profile.pool_size)
    truth = GroundTruth(kind=profile.kind, seed=profile.seed, pixel_length=0)

    chunks = [ptcodec.PSB_BYTES]
    offset = len(ptcodec.PSB_BYTES)
    pixels = 0
    burst_pixels = 0
    while pixels < profile.length:
        # benign chunk: a TNT run followed by a pool-addressed TIP
        chunk_packets = _tnt_run(rng, profile.p_taken, profile.length - pixels)
        if pixels + _pixel_count(chunk_packets) < profile.length:
            addr = pool[rng.next_below(len(pool))]
            chunk_packets.append(
                ptcodec.tip(PacketKind.TIP, 2, (addr & 0xFFFF_FFFF).to_bytes(4, "little"))
            )
        encoded = ptcodec.encode_stream(chunk_packets)
        chunks.append(encoded)
        offset += len(encoded)
        pixels += _pixel_count(chunk_packets)

        if (
            profile.kind == "malicious"
            and pixels < profile.length
            and burst_pixels < profile.burst_rate * pixels
        ):
            budget = rng.next_range(profile.burst_min, profile.burst_max)
            burst = _gadget_burst(rng, budget)
            encoded = ptcodec.encode_stream(burst)
            truth.burst_byte_ranges.append((offset, offset + len(encoded)))
            chunks.append(encoded)
            offset += len(encoded)
            added = _pixel_count(burst)
            pixels += added
            burst_pixels += added

    truth.pixel_length = pixels
    truth.burst_pixels = burst_pixels
    return b"".join(chunks), truth


def gen_dataset(n_benign: int, n_malicious: int, base_profile: SynthProfile,
                seed: int, out_dir) -> str:
    """Write one .pt file per trace plus a manifest CSV; returns its path.

    Per-trace seeds derive as seed + index (benign first), so regeneration
    with identical arguments is byte-identical.
    """
    if n_benign < 0 or n_malicious < 0:
        raise ValueError("trace counts must be >= 0")
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    specs = [("benign", i) for i in range(n_benign)]
    specs += [("malicious", i) for i in range(n_malicious)]
    for idx, (kind, i) in enumerate(specs):
        profile = replace(
            base_profile,
            kind=kind,
            burst_rate=base_profile.burst_rate if kind == "malicious" else 0.0,
            seed=seed + idx,
        )
        raw, _ = gen_trace(profile)
        name = f"{kind}_{i:04d}.pt"
        with open(os.path.join(out_dir, name), "wb") as f:
            f.write(raw)
        rows.append(f"{name},{kind},\n")
    manifest_path = os.path.join(out_dir, "manifest.csv")
    with open(manifest_path, "w", encoding="utf-8", newline="") as f:
        f.write("path,label,split\n")
        f.writelines(rows)
    return manifest_path
