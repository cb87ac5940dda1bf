"""Bit-exact codec for a compact branch-trace packet format.

Wire format (bit 0 = least significant):

* ``PAD``      single byte ``0x00``.
* ``PSB``      16 bytes: the pair ``0x02 0x82`` repeated 8 times.
* ``PSBEND``   ``0x02 0x23``.
* ``ShortTNT`` single byte B with bit0 = 0 and B not in {0x00, 0x02}.
  The highest set bit s (s in [2, 7]) is the stop bit; branch bits occupy
  bits s-1 .. 1 with the oldest branch in bit s-1; bit value 1 = taken.
* ``LongTNT``  ``0x02 0xA3`` followed by 6 payload bytes forming a 48-bit
  little-endian value v != 0; the highest set bit of v is the stop bit and
  the bits below it are branch bits, oldest first.
* TIP family   header byte H where H & 0x1F selects the kind
  (0x0D = TIP, 0x11 = TIP.PGE, 0x01 = TIP.PGD, 0x1D = FUP) and H >> 5 is
  the ip-bytes compression code. Payload is little-endian; length by code:
  0 -> 0, 1 -> 2, 2 -> 4, 3 -> 6, 4 -> 6, 6 -> 8 bytes; codes 5 and 7 are
  reserved and never decode into a packet.

All operations are pure functions over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class PacketKind(Enum):
    SHORT_TNT = "short_tnt"
    LONG_TNT = "long_tnt"
    TIP = "tip"
    TIP_PGE = "tip_pge"
    TIP_PGD = "tip_pgd"
    FUP = "fup"
    PSB = "psb"
    PSBEND = "psbend"
    PAD = "pad"


TIP_KINDS = frozenset(
    {PacketKind.TIP, PacketKind.TIP_PGE, PacketKind.TIP_PGD, PacketKind.FUP}
)

# H & 0x1F -> TIP-family kind
_TIP_OPCODES = {
    0x0D: PacketKind.TIP,
    0x11: PacketKind.TIP_PGE,
    0x01: PacketKind.TIP_PGD,
    0x1D: PacketKind.FUP,
}
_TIP_OPCODE_OF = {kind: op for op, kind in _TIP_OPCODES.items()}

# ip_bytes_code -> payload byte count (codes 5 and 7 are reserved)
IP_BYTES_LEN = {0: 0, 1: 2, 2: 4, 3: 6, 4: 6, 6: 8}

PSB_BYTES = bytes([0x02, 0x82]) * 8
PSBEND_BYTES = bytes([0x02, 0x23])
LONG_TNT_OPCODE = 0xA3

SHORT_TNT_MAX_BITS = 6
LONG_TNT_MAX_BITS = 47


class CodecError(ValueError):
    """Base class for codec failures; carries the byte offset."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class UnknownHeaderByte(CodecError):
    def __init__(self, offset: int, byte: int):
        super().__init__(offset, f"unknown header byte 0x{byte:02X}")
        self.byte = byte


class TruncatedPacket(CodecError):
    def __init__(self, offset: int):
        super().__init__(offset, "stream ends mid-packet")


class ReservedIpBytesCode(CodecError):
    def __init__(self, offset: int, code: int):
        super().__init__(offset, f"reserved ip_bytes code {code}")
        self.code = code


class ZeroPayloadTNT(CodecError):
    def __init__(self, offset: int):
        super().__init__(offset, "long TNT payload is zero (no stop bit)")


class InvalidPacket(ValueError):
    """Raised by the encoder when a packet violates its invariants."""


@dataclass(frozen=True)
class Packet:
    """One decoded trace packet.

    ``branch_bits`` is set for TNT kinds (True = taken, oldest first);
    ``ip_bytes_code`` / ``payload`` for the TIP family. ``byte_offset`` is
    the position of the packet's first byte in the source stream.
    """

    kind: PacketKind
    byte_offset: int = 0
    branch_bits: tuple[bool, ...] = ()
    ip_bytes_code: int = 0
    payload: bytes = b""

    def same_value(self, other: "Packet") -> bool:
        """Equality ignoring byte_offset (used by round-trip checks)."""
        return (
            self.kind == other.kind
            and self.branch_bits == other.branch_bits
            and self.ip_bytes_code == other.ip_bytes_code
            and self.payload == other.payload
        )


@dataclass
class DecodeReport:
    packets: list[Packet] = field(default_factory=list)
    diagnostics: list[tuple[int, str]] = field(default_factory=list)
    bytes_consumed: int = 0


def short_tnt(bits) -> Packet:
    return Packet(PacketKind.SHORT_TNT, branch_bits=tuple(bool(b) for b in bits))


def long_tnt(bits) -> Packet:
    return Packet(PacketKind.LONG_TNT, branch_bits=tuple(bool(b) for b in bits))


def tip(kind: PacketKind, code: int, payload: bytes) -> Packet:
    return Packet(kind, ip_bytes_code=code, payload=bytes(payload))


def _decode_one(raw: bytes, pos: int) -> Packet:
    """Decode the packet starting at pos; raises CodecError subclasses."""
    b = raw[pos]
    if b == 0x00:
        return Packet(PacketKind.PAD, byte_offset=pos)
    if b == 0x02:
        if pos + 1 >= len(raw):
            raise TruncatedPacket(pos)
        op = raw[pos + 1]
        if op == 0x82:
            end = pos + len(PSB_BYTES)
            chunk = raw[pos:end]
            if PSB_BYTES.startswith(chunk) and len(chunk) < len(PSB_BYTES):
                raise TruncatedPacket(pos)
            if chunk != PSB_BYTES:
                raise UnknownHeaderByte(pos, b)
            return Packet(PacketKind.PSB, byte_offset=pos)
        if op == 0x23:
            return Packet(PacketKind.PSBEND, byte_offset=pos)
        if op == LONG_TNT_OPCODE:
            if pos + 8 > len(raw):
                raise TruncatedPacket(pos)
            v = int.from_bytes(raw[pos + 2 : pos + 8], "little")
            if v == 0:
                raise ZeroPayloadTNT(pos)
            s = v.bit_length() - 1  # stop bit index
            bits = tuple(bool((v >> i) & 1) for i in range(s - 1, -1, -1))
            return Packet(PacketKind.LONG_TNT, byte_offset=pos, branch_bits=bits)
        raise UnknownHeaderByte(pos, b)
    if b & 1 == 0:
        # ShortTNT: stop bit is the highest set bit, branch bits below it
        # down to bit 1 (bit 0 is the opcode 0).
        s = b.bit_length() - 1
        bits = tuple(bool((b >> i) & 1) for i in range(s - 1, 0, -1))
        return Packet(PacketKind.SHORT_TNT, byte_offset=pos, branch_bits=bits)
    kind = _TIP_OPCODES.get(b & 0x1F)
    if kind is None:
        raise UnknownHeaderByte(pos, b)
    code = b >> 5
    if code not in IP_BYTES_LEN:
        raise ReservedIpBytesCode(pos, code)
    n = IP_BYTES_LEN[code]
    if pos + 1 + n > len(raw):
        raise TruncatedPacket(pos)
    return Packet(
        kind,
        byte_offset=pos,
        ip_bytes_code=code,
        payload=bytes(raw[pos + 1 : pos + 1 + n]),
    )


def packet_length(p: Packet) -> int:
    """Encoded byte length of a packet."""
    if p.kind is PacketKind.PAD:
        return 1
    if p.kind is PacketKind.PSB:
        return 16
    if p.kind is PacketKind.PSBEND:
        return 2
    if p.kind is PacketKind.SHORT_TNT:
        return 1
    if p.kind is PacketKind.LONG_TNT:
        return 8
    return 1 + IP_BYTES_LEN[p.ip_bytes_code]


def decode_stream(raw: bytes, mode: str = "strict") -> DecodeReport:
    """Decode a byte stream into packets.

    In strict mode any malformed byte raises a CodecError. In lenient mode
    every input byte is consumed: unrecognized or truncated spots skip one
    byte and append a (offset, reason) diagnostic.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    raw = bytes(raw)
    report = DecodeReport()
    pos = 0
    while pos < len(raw):
        try:
            pkt = _decode_one(raw, pos)
        except CodecError as err:
            if mode == "strict":
                raise
            report.diagnostics.append((pos, type(err).__name__))
            pos += 1
            continue
        report.packets.append(pkt)
        pos += packet_length(pkt)
    report.bytes_consumed = pos
    return report


def encode_packet(p: Packet) -> bytes:
    """Canonical encoding of one packet (byte_offset is ignored)."""
    if p.kind is PacketKind.PAD:
        return b"\x00"
    if p.kind is PacketKind.PSB:
        return PSB_BYTES
    if p.kind is PacketKind.PSBEND:
        return PSBEND_BYTES
    if p.kind is PacketKind.SHORT_TNT:
        nbits = len(p.branch_bits)
        if not 1 <= nbits <= SHORT_TNT_MAX_BITS:
            raise InvalidPacket(f"short TNT needs 1..6 branch bits, got {nbits}")
        b = 1 << (nbits + 1)  # stop bit
        for i, bit in enumerate(p.branch_bits):
            if bit:
                b |= 1 << (nbits - i)
        return bytes([b])
    if p.kind is PacketKind.LONG_TNT:
        nbits = len(p.branch_bits)
        if not 1 <= nbits <= LONG_TNT_MAX_BITS:
            raise InvalidPacket(f"long TNT needs 1..47 branch bits, got {nbits}")
        v = 1 << nbits  # stop bit
        for i, bit in enumerate(p.branch_bits):
            if bit:
                v |= 1 << (nbits - 1 - i)
        return bytes([0x02, LONG_TNT_OPCODE]) + v.to_bytes(6, "little")
    if p.kind in TIP_KINDS:
        if p.ip_bytes_code not in IP_BYTES_LEN:
            raise InvalidPacket(f"reserved ip_bytes code {p.ip_bytes_code}")
        want = IP_BYTES_LEN[p.ip_bytes_code]
        if len(p.payload) != want:
            raise InvalidPacket(
                f"code {p.ip_bytes_code} needs {want} payload bytes, "
                f"got {len(p.payload)}"
            )
        header = (p.ip_bytes_code << 5) | _TIP_OPCODE_OF[p.kind]
        return bytes([header]) + p.payload
    raise InvalidPacket(f"unknown packet kind {p.kind!r}")


def encode_stream(packets) -> bytes:
    return b"".join(encode_packet(p) for p in packets)


def reconstruct_ips(packets, initial_ip: int) -> list[tuple[int, int]]:
    """Thread last-IP state through TIP-family packets.

    Returns one (byte_offset, address) entry per TIP-family packet with a
    nonzero ip_bytes_code. Update rules by code: 1 splices the low 16
    bits, 2 the low 32, 3 replaces the low 48 and sign-extends bit 47 into
    bits 63:48, 4 splices the low 48, 6 replaces all 64 bits.
    """
    last_ip = initial_ip & 0xFFFF_FFFF_FFFF_FFFF
    out = []
    for p in packets:
        if p.kind not in TIP_KINDS or p.ip_bytes_code == 0:
            continue
        v = int.from_bytes(p.payload, "little")
        code = p.ip_bytes_code
        if code == 1:
            last_ip = (last_ip & ~0xFFFF) | v
        elif code == 2:
            last_ip = (last_ip & ~0xFFFF_FFFF) | v
        elif code == 3:
            sign = 0xFFFF_0000_0000_0000 if v & (1 << 47) else 0
            last_ip = sign | v
        elif code == 4:
            last_ip = (last_ip & ~0xFFFF_FFFF_FFFF) | v
        elif code == 6:
            last_ip = v
        last_ip &= 0xFFFF_FFFF_FFFF_FFFF
        out.append((p.byte_offset, last_ip))
    return out
