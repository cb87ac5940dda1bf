import pytest
from hypothesis import given, settings, strategies as st

from tracelens import ptcodec
from tracelens.ptcodec import (
    IP_BYTES_LEN,
    Packet,
    PacketKind,
    InvalidPacket,
    ReservedIpBytesCode,
    TruncatedPacket,
    UnknownHeaderByte,
    ZeroPayloadTNT,
    decode_stream,
    encode_stream,
    reconstruct_ips,
)


def decode(raw, mode="strict"):
    return decode_stream(bytes(raw), mode)


class TestDecodeExamples:
    def test_empty_stream(self):
        report = decode([])
        assert report.packets == []
        assert report.diagnostics == []
        assert report.bytes_consumed == 0

    def test_short_tnt_single_taken(self):
        # 0x06 = stop bit at bit 2, payload bit 1 = 1
        (p,) = decode([0x06]).packets
        assert p.kind is PacketKind.SHORT_TNT
        assert p.branch_bits == (True,)

    def test_tip_code1(self):
        # header low-5 = 0x0D, bits 7:5 = 001 -> 2 payload bytes
        (p,) = decode([0x2D, 0x34, 0x12]).packets
        assert p.kind is PacketKind.TIP
        assert p.ip_bytes_code == 1
        assert p.payload == bytes([0x34, 0x12])

    def test_pad_psb_psbend(self):
        raw = b"\x00" + ptcodec.PSB_BYTES + ptcodec.PSBEND_BYTES
        kinds = [p.kind for p in decode(raw).packets]
        assert kinds == [PacketKind.PAD, PacketKind.PSB, PacketKind.PSBEND]

    def test_long_tnt_hand_decoded(self):
        # v = 0b1101 = stop bit 3, branch bits (oldest first) T, N, T
        raw = bytes([0x02, 0xA3, 0x0D, 0, 0, 0, 0, 0])
        (p,) = decode(raw).packets
        assert p.kind is PacketKind.LONG_TNT
        assert p.branch_bits == (True, False, True)

    def test_short_tnt_full_width(self):
        # 0xFE: stop at bit 7, six taken branches
        (p,) = decode([0xFE]).packets
        assert p.branch_bits == (True,) * 6

    def test_byte_offsets_strictly_increase(self):
        raw = bytes([0x06]) + ptcodec.PSB_BYTES + bytes([0x2D, 0x34, 0x12, 0x00])
        offs = [p.byte_offset for p in decode(raw).packets]
        assert offs == sorted(set(offs))
        assert all(o < len(raw) for o in offs)


class TestStrictErrors:
    def test_unknown_header(self):
        with pytest.raises(UnknownHeaderByte) as e:
            decode([0x06, 0x03])
        assert e.value.offset == 1

    def test_truncated_tip(self):
        with pytest.raises(TruncatedPacket):
            decode([0x2D, 0x34])

    def test_truncated_psb(self):
        with pytest.raises(TruncatedPacket):
            decode(ptcodec.PSB_BYTES[:10])

    def test_reserved_ip_bytes_code(self):
        header = (5 << 5) | 0x0D
        with pytest.raises(ReservedIpBytesCode) as e:
            decode([header] + [0] * 10)
        assert e.value.code == 5

    def test_zero_payload_long_tnt(self):
        with pytest.raises(ZeroPayloadTNT):
            decode([0x02, 0xA3, 0, 0, 0, 0, 0, 0])

    def test_0x02_alone_is_truncated(self):
        with pytest.raises(TruncatedPacket):
            decode([0x02])


class TestLenient:
    def test_skips_one_byte_per_diagnostic(self):
        report = decode([0x03, 0x06], mode="lenient")
        assert len(report.diagnostics) == 1
        assert report.diagnostics[0][0] == 0
        assert len(report.packets) == 1
        assert report.bytes_consumed == 2

    def test_consumes_all_input(self):
        import random

        rnd = random.Random(7)
        raw = bytes(rnd.randrange(256) for _ in range(20_000))
        report = decode(raw, mode="lenient")
        assert report.bytes_consumed == len(raw)

    @given(st.binary(max_size=400))
    def test_fuzz_totality(self, raw):
        report = decode_stream(raw, "lenient")
        assert report.bytes_consumed == len(raw)
        offs = [p.byte_offset for p in report.packets]
        assert offs == sorted(offs)


class TestEncode:
    def test_empty(self):
        assert encode_stream([]) == b""

    def test_short_tnt_inverse(self):
        assert encode_stream([ptcodec.short_tnt([True])]) == bytes([0x06])

    def test_psb_bytes(self):
        assert encode_stream([Packet(PacketKind.PSB)]) == bytes([0x02, 0x82]) * 8

    def test_invalid_short_tnt(self):
        with pytest.raises(InvalidPacket):
            encode_stream([ptcodec.short_tnt([])])
        with pytest.raises(InvalidPacket):
            encode_stream([ptcodec.short_tnt([True] * 7)])

    def test_invalid_tip_payload(self):
        with pytest.raises(InvalidPacket):
            encode_stream([ptcodec.tip(PacketKind.TIP, 1, b"\x01")])

    def test_prefix_truncation_never_misdecodes(self):
        pkts = [
            Packet(PacketKind.PSB),
            ptcodec.tip(PacketKind.TIP_PGE, 3, bytes(6)),
            ptcodec.long_tnt([True, True, False]),
        ]
        raw = encode_stream(pkts)
        for cut in range(1, len(raw)):
            prefix = raw[:cut]
            try:
                report = decode_stream(prefix, "strict")
            except TruncatedPacket:
                continue
            # a clean decode of a prefix must be a prefix of the packets
            assert all(
                a.same_value(b) for a, b in zip(report.packets, pkts)
            )


# ---- property tests --------------------------------------------------------

branch_bits_short = st.lists(st.booleans(), min_size=1, max_size=6)
branch_bits_long = st.lists(st.booleans(), min_size=1, max_size=47)
tip_kind = st.sampled_from(sorted(ptcodec.TIP_KINDS, key=lambda k: k.value))
ip_code = st.sampled_from(sorted(IP_BYTES_LEN))


@st.composite
def packets(draw):
    choice = draw(st.integers(0, 5))
    if choice == 0:
        return ptcodec.short_tnt(draw(branch_bits_short))
    if choice == 1:
        return ptcodec.long_tnt(draw(branch_bits_long))
    if choice == 2:
        code = draw(ip_code)
        payload = bytes(
            draw(st.lists(st.integers(0, 255), min_size=IP_BYTES_LEN[code],
                          max_size=IP_BYTES_LEN[code]))
        )
        return ptcodec.tip(draw(tip_kind), code, payload)
    return Packet([PacketKind.PSB, PacketKind.PSBEND, PacketKind.PAD][choice - 3])


@settings(max_examples=300, deadline=None)
@given(st.lists(packets(), max_size=30))
def test_round_trip_property(pkts):
    raw = encode_stream(pkts)
    decoded = decode_stream(raw, "strict").packets
    assert len(decoded) == len(pkts)
    assert all(a.same_value(b) for a, b in zip(decoded, pkts))
    # canonical: re-encoding reproduces the bytes
    assert encode_stream(decoded) == raw


class TestReconstructIps:
    def test_no_tips(self):
        assert reconstruct_ips(decode([0x06, 0x00]).packets, 0) == []

    def test_low16_splice(self):
        pkts = decode([0x2D, 0x34, 0x12]).packets
        assert reconstruct_ips(pkts, 0xFFFF_0000_DEAD_0000) == [(0, 0xFFFF_0000_DEAD_1234)]

    def test_full_width_ignores_initial(self):
        addr = 0x1122_3344_5566_7788
        pkts = [ptcodec.tip(PacketKind.TIP, 6, addr.to_bytes(8, "little"))]
        assert reconstruct_ips(pkts, 0xDEAD_BEEF)[0][1] == addr

    def test_code0_no_entry_state_unchanged(self):
        pkts = [
            ptcodec.tip(PacketKind.TIP, 0, b""),
            ptcodec.tip(PacketKind.TIP, 1, (0xABCD).to_bytes(2, "little")),
        ]
        out = reconstruct_ips(pkts, 0x1111_0000)
        assert len(out) == 1
        assert out[0][1] == 0x1111_ABCD

    def test_sign_extension_code3(self):
        payload = (0x8000_0000_0001).to_bytes(6, "little")
        pkts = [ptcodec.tip(PacketKind.TIP, 3, payload)]
        assert reconstruct_ips(pkts, 0)[0][1] == 0xFFFF_8000_0000_0001
        payload = (0x7FFF_FFFF_FFFF).to_bytes(6, "little")
        pkts = [ptcodec.tip(PacketKind.TIP, 3, payload)]
        assert reconstruct_ips(pkts, 0xAAAA_0000_0000_0000)[0][1] == 0x7FFF_FFFF_FFFF

    def test_low48_splice_code4(self):
        payload = (0x1234_5678_9ABC).to_bytes(6, "little")
        pkts = [ptcodec.tip(PacketKind.TIP, 4, payload)]
        assert reconstruct_ips(pkts, 0xFFFF_0000_0000_0000)[0][1] == 0xFFFF_1234_5678_9ABC

    def test_state_threads_through_sequence(self):
        pkts = [
            ptcodec.tip(PacketKind.TIP, 6, (0x1111_2222_3333_4444).to_bytes(8, "little")),
            ptcodec.tip(PacketKind.TIP, 1, (0x9999).to_bytes(2, "little")),
        ]
        out = reconstruct_ips(pkts, 0)
        assert out[1][1] == 0x1111_2222_3333_9999
