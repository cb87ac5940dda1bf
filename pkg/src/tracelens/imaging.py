"""Pixel streams and image tiles.

Packets (or raw binaries) become a pixel stream, the stream is sliced
into contiguous segments of m*m pixels, and each segment is reshaped
row-major into an m x m grayscale tile. Tiles index from 1 and can be
replicated to 3 channels, mean-pool downscaled, exported as PGM/PPM, or
flattened to a [0, 1] feature vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ptcodec import Packet, PacketKind, TIP_KINDS, encode_packet

DYNAMIC_TRACE = "dynamic-trace"
STATIC_BINARY = "static-binary"


class EmptyInput(ValueError):
    pass


class AlreadyMultiChannel(ValueError):
    pass


class NonDivisibleFactor(ValueError):
    pass


@dataclass(frozen=True)
class PixelArray:
    """A stream of pixel values in [0, 255]."""

    pixels: bytes
    source: str = DYNAMIC_TRACE

    def __len__(self) -> int:
        return len(self.pixels)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8)


@dataclass(frozen=True)
class ImageTile:
    """One m x m tile; values is (channels, m, m) uint8, index k is 1-based."""

    values: np.ndarray
    index: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.uint8)
        if v.ndim == 2:
            v = v[np.newaxis, :, :]
        if v.ndim != 3 or v.shape[1] != v.shape[2] or v.shape[0] not in (1, 3):
            raise ValueError(f"tile values must be (1|3, m, m), got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def side(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class TileBatch:
    tiles: tuple[ImageTile, ...]
    tail_policy: str
    source_length: int

    @property
    def n(self) -> int:
        return len(self.tiles)


def pixels_from_packets(packets, tip_family: bool = False) -> PixelArray:
    """Emit pixels from control-flow packets, in stream order.

    A ShortTNT contributes its full wire byte (its branch bits are
    sub-byte), a LongTNT its 6 payload bytes, and a TIP its payload bytes.
    With ``tip_family`` set, TIP.PGE / TIP.PGD / FUP payloads are included
    too. Sync and pad packets contribute nothing.
    """
    out = bytearray()
    for p in packets:
        if p.kind is PacketKind.SHORT_TNT:
            out += encode_packet(p)
        elif p.kind is PacketKind.LONG_TNT:
            out += encode_packet(p)[2:]
        elif p.kind is PacketKind.TIP:
            out += p.payload
        elif tip_family and p.kind in TIP_KINDS:
            out += p.payload
    return PixelArray(bytes(out), source=DYNAMIC_TRACE)


def pixels_from_binary(raw: bytes) -> PixelArray:
    """Identity mapping: byte i of a binary becomes pixel i."""
    return PixelArray(bytes(raw), source=STATIC_BINARY)


def slice_tiles(x: PixelArray, m: int, tail_policy: str = "drop") -> TileBatch:
    """Slice the stream into n segments of m*m pixels and reshape row-major.

    ``drop`` discards a trailing partial segment (n = floor(L / m^2));
    ``pad_zero`` zero-extends the final partial segment to a full tile.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if tail_policy not in ("drop", "pad_zero"):
        raise ValueError(f"tail_policy must be 'drop' or 'pad_zero', got {tail_policy!r}")
    L = len(x)
    if L == 0:
        raise EmptyInput("empty pixel stream yields no tiles")
    seg = m * m
    if tail_policy == "drop":
        n = L // seg
        data = x.as_array()[: n * seg]
    else:
        n = math.ceil(L / seg)
        data = np.zeros(n * seg, dtype=np.uint8)
        data[:L] = x.as_array()
    tiles = tuple(
        ImageTile(data[k * seg : (k + 1) * seg].reshape(m, m), index=k + 1)
        for k in range(n)
    )
    return TileBatch(tiles=tiles, tail_policy=tail_policy, source_length=L)


def replicate_channels(t: ImageTile) -> ImageTile:
    """Grayscale -> 3 channels, each a copy of the input grid."""
    if t.channels != 1:
        raise AlreadyMultiChannel(f"tile already has {t.channels} channels")
    return ImageTile(np.repeat(t.values, 3, axis=0), index=t.index)


def pool_downscale(t: ImageTile, factor: int) -> ImageTile:
    """Mean-pool by factor x factor blocks, rounding half-up, clamped."""
    if t.channels != 1:
        raise AlreadyMultiChannel("pooling is defined on single-channel tiles")
    if factor < 1 or t.side % factor != 0:
        raise NonDivisibleFactor(f"factor {factor} does not divide side {t.side}")
    if factor == 1:
        return t
    m = t.side // factor
    blocks = t.values[0].reshape(m, factor, m, factor).astype(np.int64)
    sums = blocks.sum(axis=(1, 3))
    # round half-up on the exact integer sum, then clamp
    pooled = (sums * 2 + factor * factor) // (2 * factor * factor)
    return ImageTile(np.clip(pooled, 0, 255).astype(np.uint8)[np.newaxis], index=t.index)


def normalize(t: ImageTile) -> np.ndarray:
    """Channel-major row-major flattening scaled into [0, 1] floats."""
    return t.values.reshape(-1).astype(np.float64) / 255.0


def write_netpbm(t: ImageTile, path) -> None:
    """Export as binary PGM (P5) for 1 channel or PPM (P6) for 3 channels."""
    data = netpbm_bytes(t)
    with open(path, "wb") as f:
        f.write(data)


def netpbm_bytes(t: ImageTile) -> bytes:
    m = t.side
    if t.channels == 1:
        header = f"P5\n{m} {m}\n255\n".encode("ascii")
        body = t.values[0].tobytes()
    else:
        header = f"P6\n{m} {m}\n255\n".encode("ascii")
        # interleave channels per pixel (RGB triplets, row-major)
        body = np.transpose(t.values, (1, 2, 0)).tobytes()
    return header + body
