import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phtelem import protocol as p


def frame_strategy():
    return st.one_of(
        st.builds(
            p.Data,
            seq=st.integers(0, 0xFFFF),
            t_ms=st.integers(0, 0xFFFFFFFF),
            ph_raw=st.integers(0, 4095),
            temp_raw=st.integers(0, 4095),
        ),
        st.builds(p.Status, battery_mv=st.integers(0, 0xFFFF), flags=st.integers(0, 0xFF)),
        st.just(p.CmdStart()),
        st.just(p.CmdStop()),
        st.builds(
            p.CmdConfig,
            sample_hz=st.integers(0, 0xFFFF),
            avg_n=st.integers(0, 0xFF),
            ma_window=st.integers(0, 0xFF),
        ),
        st.builds(p.Ack, cmd=st.integers(0, 0xFF), status=st.integers(0, 0xFF)),
    )


ALL_VARIANTS = [
    p.Data(seq=1, t_ms=100, ph_raw=2048, temp_raw=1730),
    p.Status(battery_mv=3700, flags=0x01),
    p.CmdStart(),
    p.CmdStop(),
    p.CmdConfig(sample_hz=100, avg_n=10, ma_window=5),
    p.Ack(cmd=p.TYPE_CMD_START, status=p.ACK_OK),
]


class TestCrc:
    def test_ccitt_check_value(self):
        assert p.crc16_ccitt(b"123456789") == 0x29B1

    def test_empty(self):
        assert p.crc16_ccitt(b"") == 0xFFFF

    def test_detects_all_single_bit_errors(self):
        msg = bytearray(p.encode(ALL_VARIANTS[0])[2:-2])
        good = p.crc16_ccitt(bytes(msg))
        for byte in range(len(msg)):
            for bit in range(8):
                bad = bytearray(msg)
                bad[byte] ^= 1 << bit
                assert p.crc16_ccitt(bytes(bad)) != good

    def test_detects_sampled_double_bit_errors(self):
        import random

        rng = random.Random(5)
        msg = bytes(rng.randrange(256) for _ in range(12))
        good = p.crc16_ccitt(msg)
        nbits = len(msg) * 8
        for _ in range(500):
            b1, b2 = rng.sample(range(nbits), 2)
            bad = bytearray(msg)
            bad[b1 // 8] ^= 1 << (b1 % 8)
            bad[b2 // 8] ^= 1 << (b2 % 8)
            assert p.crc16_ccitt(bytes(bad)) != good


class TestEncode:
    def test_cmd_start_layout(self):
        wire = p.encode(p.CmdStart())
        assert wire[:4] == bytes([0xA5, 0x01, 0x10, 0x00])
        assert len(wire) == 6

    def test_data_frame_layout(self):
        wire = p.encode(p.Data(seq=1, t_ms=100, ph_raw=2048, temp_raw=1730))
        expected = bytes.fromhex("a501010a01006400000000 08c206".replace(" ", ""))
        assert wire[: 4 + 10] == expected
        crc = p.crc16_ccitt(wire[2:-2])
        assert wire[-2:] == crc.to_bytes(2, "little")

    def test_length_is_6_plus_len(self):
        for f in ALL_VARIANTS:
            wire = p.encode(f)
            assert len(wire) == 6 + wire[3]

    def test_raw_counts_validated(self):
        with pytest.raises(ValueError):
            p.Data(seq=0, t_ms=0, ph_raw=4096, temp_raw=0)


class TestDecode:
    def test_round_trip_each_variant(self):
        for f in ALL_VARIANTS:
            frames, diags = p.decode(p.encode(f))
            assert frames == [f]
            assert diags == []

    @settings(max_examples=500, deadline=None)
    @given(frame_strategy())
    def test_round_trip_random(self, frame):
        frames, diags = p.decode(p.encode(frame))
        assert frames == [frame]
        assert diags == []

    def test_concatenated_stream(self):
        stream = b"".join(p.encode(f) for f in ALL_VARIANTS)
        frames, diags = p.decode(stream)
        assert frames == ALL_VARIANTS
        assert diags == []

    @pytest.mark.parametrize("frame", ALL_VARIANTS, ids=lambda f: type(f).__name__)
    def test_single_bit_flip_rejected(self, frame):
        wire = p.encode(frame)
        for byte in range(len(wire)):
            for bit in range(8):
                corrupted = bytearray(wire)
                corrupted[byte] ^= 1 << bit
                frames, diags = p.decode(bytes(corrupted))
                assert frames == []
                assert len(diags) >= 1

    def test_resync_over_garbage(self):
        a, b = ALL_VARIANTS[0], ALL_VARIANTS[4]
        stream = p.encode(a) + b"\x01\x02\x03" + p.encode(b)
        frames, diags = p.decode(stream)
        assert frames == [a, b]
        assert len(diags) == 1  # one garbage region

    def test_truncated_tail(self):
        wire = p.encode(ALL_VARIANTS[0])
        frames, diags = p.decode(wire[:-3])
        assert frames == []
        assert any("truncated" in d.reason for d in diags)

    def test_empty_and_garbage_only(self):
        assert p.decode(b"") == ([], [])
        frames, diags = p.decode(b"\x00\x01\x02")
        assert frames == []
        assert len(diags) == 1


class TestLink:
    def test_no_drop_preserves_order(self):
        link = p.LossyLink(p.LinkParams(drop_prob=0.0, latency_ms=10.0, jitter_ms=0.0, seed=1))
        deliveries = [link.transmit(f, 100.0 * i) for i, f in enumerate(ALL_VARIANTS)]
        assert all(d is not None for d in deliveries)
        times = [t for _, t in deliveries]
        assert times == sorted(times)
        assert times[0] == 10.0

    def test_seeded_drop_rate(self):
        link = p.LossyLink(p.LinkParams(drop_prob=0.1, seed=99))
        delivered = sum(
            1 for i in range(10_000) if link.transmit(p.Data(i & 0xFFFF, i, 0, 0), float(i))
        )
        # binomial expectation 9000 +/- 2%
        assert abs(delivered - 9000) <= 180
        assert link.dropped == 10_000 - delivered

    def test_same_seed_same_outcome(self):
        def run():
            link = p.LossyLink(p.LinkParams(drop_prob=0.3, jitter_ms=5.0, seed=7))
            return [link.transmit(p.Data(i, i, 0, 0), float(i)) for i in range(200)]

        assert run() == run()

    def test_jittered_delay_bounds(self):
        link = p.LossyLink(p.LinkParams(latency_ms=20.0, jitter_ms=10.0, seed=3))
        for i in range(500):
            _, t = link.transmit(p.Data(i, i, 0, 0), 1000.0)
            assert 1020.0 <= t <= 1030.0

    def test_command_acknowledged(self):
        link = p.LossyLink(p.LinkParams(drop_prob=0.0, latency_ms=5.0))
        ack, t = link.send_command(
            p.CmdStart(), 0.0, lambda f: p.Ack(p.TYPE_CMD_START, p.ACK_OK)
        )
        assert ack.status == p.ACK_OK
        assert t == 5.0

    def test_command_retries_then_fails(self):
        link = p.LossyLink(p.LinkParams(drop_prob=1.0, seed=0))
        attempts = []
        with pytest.raises(p.LinkFailureError):
            link.send_command(
                p.CmdConfig(100, 10, 5), 0.0, lambda f: attempts.append(f) or p.Ack(0, 0)
            )
        assert attempts == []  # nothing ever got through

    def test_received_seq_strictly_increasing_under_loss(self):
        link = p.LossyLink(p.LinkParams(drop_prob=0.4, seed=21))
        got = [
            f.seq
            for i in range(2000)
            if (r := link.transmit(p.Data(i & 0xFFFF, i * 100, 0, 0), i * 100.0)) is not None
            for f, _ in [r]
        ]
        assert got == sorted(set(got))
