"""Authentication: field arithmetic, tagging, key pool accounting.

The field multipliers are checked against independent in-test
implementations (shift-reduce for GF(2^64), the xtime ladder for
GF(2^8)); the collision bound is counted exhaustively over every key of
the 8-bit toy field.
"""

import numpy as np
import pytest

from qkdsim.auth import (AuthenticatedChannel, AuthenticatedMessage,
                         AuthenticationFailure, AuthKeyPool, KeyExhausted,
                         KeyLedger, compute_tag, consume, secret_growth,
                         verify_tag)
from qkdsim.gf2 import (MASK64, REDUCTION_POLY, Gf64Multiplier, gf8_mul,
                        gf64_mul, poly_hash_blocks)
from qkdsim.rng import RandomSource


def ref_mul64(a: int, b: int) -> int:
    """Shift-and-reduce product in GF(2^64) mod x^64 + x^4 + x^3 + x + 1,
    written independently of the library's nibble-table route."""
    acc = 0
    for i in range(64):
        if (b >> i) & 1:
            acc ^= a << i
    for i in range(126, 63, -1):
        if (acc >> i) & 1:
            acc ^= ((1 << 64) | 0x1B) << (i - 64)
    return acc


def ref_mul8(a: int, b: int) -> int:
    """xtime ladder in GF(2^8) mod x^8 + x^4 + x^3 + x + 1."""
    acc = 0
    for _ in range(8):
        if b & 1:
            acc ^= a
        carry = a & 0x80
        a = (a << 1) & 0xFF
        if carry:
            a ^= 0x1B
        b >>= 1
    return acc


def ref_tag(message: bytes, hash_key: int, otp: int) -> int:
    """Recompute a tag from the documented construction only."""
    acc = 0
    for i in range(0, len(message), 8):
        block = int.from_bytes(message[i:i + 8].ljust(8, b"\x00"), "big")
        acc = ref_mul64(acc ^ block, hash_key)
    return acc ^ len(message) ^ otp


class TestFieldArithmetic:
    def test_reduction_polynomial(self):
        assert REDUCTION_POLY == (1 << 64) | 0x1B
        assert MASK64 == 2**64 - 1

    def test_identity_and_zero(self):
        for a in [0, 1, 0xDEADBEEF, MASK64]:
            assert gf64_mul(a, 1) == a
            assert gf64_mul(1, a) == a
            assert gf64_mul(a, 0) == 0

    def test_single_overflow_bit_reduces_to_poly_tail(self):
        # x * x^63 = x^64 = x^4 + x^3 + x + 1 in this field.
        assert gf64_mul(2, 1 << 63) == 0x1B

    def test_matches_reference_on_random_pairs(self):
        rand = RandomSource(11)
        for _ in range(200):
            a, b = rand.uint64(), rand.uint64()
            want = ref_mul64(a, b)
            assert gf64_mul(a, b) == want
            assert gf64_mul(b, a) == want

    def test_table_multiplier_agrees(self):
        rand = RandomSource(12)
        for _ in range(20):
            k = rand.uint64()
            mul = Gf64Multiplier(k)
            for _ in range(20):
                a = rand.uint64()
                assert mul.mul(a) == gf64_mul(a, k) == ref_mul64(a, k)

    def test_gf8_exhaustive(self):
        for a in range(256):
            for b in range(256):
                assert gf8_mul(a, b) == ref_mul8(a, b)

    def test_distributivity_sampled(self):
        rand = RandomSource(13)
        for _ in range(100):
            a, b, c = rand.uint64(), rand.uint64(), rand.uint64()
            assert gf64_mul(a ^ b, c) == gf64_mul(a, c) ^ gf64_mul(b, c)


class TestPolynomialHash:
    def test_horner_single_block(self):
        key = 0x0123456789ABCDEF
        block = 0xFEDCBA9876543210
        assert poly_hash_blocks([block], key) == gf64_mul(block, key)

    def test_horner_two_blocks(self):
        key, m1, m2 = 7, 11, 13
        want = gf64_mul(gf64_mul(m1, key) ^ m2, key)
        assert poly_hash_blocks([m1, m2], key) == want

    def test_empty_is_zero(self):
        assert poly_hash_blocks([], 12345) == 0

    def test_toy_field_collision_bound(self):
        # Exhaustive over all 256 keys: two distinct messages of t blocks
        # collide on at most t keys (t + 1 when lengths differ and the
        # length constant enters). This is the universality that caps the
        # forgery probability.
        rand = RandomSource(14)
        cases = []
        for t in (1, 2, 3):
            for _ in range(60):
                m1 = [int(x) for x in rand.integers(0, 256, size=t)]
                m2 = [int(x) for x in rand.integers(0, 256, size=t)]
                if m1 != m2:
                    cases.append((m1, m2, t))
        for _ in range(60):
            m1 = [int(x) for x in rand.integers(0, 256, size=2)]
            m2 = [int(x) for x in rand.integers(0, 256, size=3)]
            cases.append((m1, m2, 3 + 1))
        for m1, m2, bound in cases:
            collisions = sum(
                1 for k in range(256)
                if poly_hash_blocks(m1, k, mul=gf8_mul) ^ len(m1)
                == poly_hash_blocks(m2, k, mul=gf8_mul) ^ len(m2))
            assert collisions <= bound


class TestComputeTag:
    def test_empty_message_zero_pad(self):
        assert compute_tag(b"", 0xABCDEF, 0) == 0

    def test_single_block_by_hand(self):
        key = 0x1122334455667788
        message = b"\x01\x02\x03\x04\x05\x06\x07\x08"
        block = 0x0102030405060708
        assert compute_tag(message, key, 0) == gf64_mul(block, key) ^ 8

    def test_short_block_right_padded(self):
        key = 0x1122334455667788
        # "A" hashes as the block 0x41 followed by seven zero bytes, with
        # the length term separating it from the explicit padded message.
        assert compute_tag(b"A", key, 0) == \
            gf64_mul(0x4100000000000000, key) ^ 1
        assert compute_tag(b"A", key, 0) != \
            compute_tag(b"A" + b"\x00" * 7, key, 0)

    def test_length_term_separates_prefixes(self):
        key = 0x99AA
        assert compute_tag(b"", key, 0) != compute_tag(b"\x00", key, 0)

    @pytest.mark.parametrize("size", [0, 1, 7, 8, 9, 64, 255, 256, 300])
    def test_matches_reference_construction(self, size):
        rand = RandomSource(15)
        message = rand.byte_string(size)
        key, otp = rand.uint64(), rand.uint64()
        assert compute_tag(message, key, otp) == ref_tag(message, key, otp)

    def test_deterministic(self):
        assert compute_tag(b"abc", 5, 9) == compute_tag(b"abc", 5, 9)

    def test_pad_is_xor_layer(self):
        base = compute_tag(b"payload", 77, 0)
        for otp in [1, 0xFFFF, 2**64 - 1]:
            assert compute_tag(b"payload", 77, otp) == base ^ otp


class TestFraming:
    def test_roundtrip(self):
        msg = AuthenticatedMessage(b"hello world", 0x1234567890ABCDEF)
        assert AuthenticatedMessage.decode(msg.encode()) == msg

    def test_empty_payload_roundtrip(self):
        msg = AuthenticatedMessage(b"", 0)
        encoded = msg.encode()
        assert len(encoded) == 12
        assert AuthenticatedMessage.decode(encoded) == msg

    def test_decode_rejects_short_frame(self):
        with pytest.raises(ValueError):
            AuthenticatedMessage.decode(b"\x00" * 11)

    def test_decode_rejects_length_mismatch(self):
        good = AuthenticatedMessage(b"abc", 1).encode()
        with pytest.raises(ValueError):
            AuthenticatedMessage.decode(good + b"\x00")
        with pytest.raises(ValueError):
            AuthenticatedMessage.decode(good[:-1])


class TestVerifyTag:
    def test_accepts_valid(self):
        key, otp = 0xA1B2C3D4E5F60718, 0x1234
        msg = AuthenticatedMessage(b"sift done", compute_tag(b"sift done",
                                                             key, otp))
        assert verify_tag(msg, key, otp)

    def test_rejects_payload_flip(self):
        key, otp = 0xA1B2C3D4E5F60718, 0x1234
        tag = compute_tag(b"sift done", key, otp)
        tampered = AuthenticatedMessage(b"sift dome", tag)
        assert not verify_tag(tampered, key, otp)

    def test_rejects_tag_flip(self):
        key, otp = 5, 6
        tag = compute_tag(b"x", key, otp)
        for bit in [0, 17, 63]:
            assert not verify_tag(AuthenticatedMessage(b"x", tag ^ (1 << bit)),
                                  key, otp)

    def test_rejects_wrong_pad(self):
        tag = compute_tag(b"x", 5, 6)
        assert not verify_tag(AuthenticatedMessage(b"x", tag), 5, 7)


class TestAuthKeyPool:
    def test_consume_advances_cursor(self):
        pool = AuthKeyPool.fresh(RandomSource(16), 300)
        out = pool.consume(128)
        assert len(out) == 128
        assert pool.cursor == 128
        assert pool.remaining == 172

    def test_consecutive_draws_are_disjoint_prefix(self):
        rand = RandomSource(17)
        pool = AuthKeyPool.fresh(rand, 256)
        a = pool.consume(100)
        b = pool.consume(56)
        assert np.array_equal(np.concatenate([a, b]), pool.bits[:156])

    def test_exhaustion_spends_nothing(self):
        pool = AuthKeyPool.fresh(RandomSource(18), 100)
        pool.consume(90)
        before = (pool.cursor, pool.ledger.consumed_bits)
        with pytest.raises(KeyExhausted):
            pool.consume(11)
        assert (pool.cursor, pool.ledger.consumed_bits) == before
        pool.consume(10)
        assert pool.remaining == 0

    def test_deposit_funds_future_draws(self):
        pool = AuthKeyPool(np.array([1, 0], dtype=np.uint8))
        pool.consume(2)
        with pytest.raises(KeyExhausted):
            pool.consume(1)
        pool.deposit([1, 1, 0])
        assert pool.remaining == 3
        assert np.array_equal(pool.consume(3), [1, 1, 0])

    def test_consume_int_big_endian(self):
        pool = AuthKeyPool(np.array([1, 0, 1, 1], dtype=np.uint8))
        assert pool.consume_int(3) == 5
        assert pool.consume_int(1) == 1

    def test_module_level_consume(self):
        pool = AuthKeyPool.fresh(RandomSource(19), 64)
        assert len(consume(pool, 32)) == 32
        assert pool.remaining == 32

    def test_rejects_invalid_bits(self):
        with pytest.raises(ValueError):
            AuthKeyPool(np.array([0, 2], dtype=np.uint8))
        with pytest.raises(ValueError):
            AuthKeyPool(np.zeros((2, 2), dtype=np.uint8))
        pool = AuthKeyPool.fresh(RandomSource(20), 8)
        with pytest.raises(ValueError):
            pool.consume(-1)

    def test_fresh_default_size(self):
        assert AuthKeyPool.fresh(RandomSource(21)).remaining == 300


class TestKeyLedger:
    def test_growth_accounting(self):
        ledger = KeyLedger()
        pool = AuthKeyPool.fresh(RandomSource(22), 512, ledger)
        pool.consume(384)
        ledger.record_produced(2000)
        assert secret_growth(ledger) == 2000 - 384

    def test_negative_growth_on_abort(self):
        ledger = KeyLedger()
        pool = AuthKeyPool.fresh(RandomSource(23), 512, ledger)
        pool.consume(256)
        ledger.record_produced(0)
        assert secret_growth(ledger) == -256

    def test_produced_set_once(self):
        ledger = KeyLedger()
        ledger.record_produced(10)
        with pytest.raises(RuntimeError):
            ledger.record_produced(11)
        with pytest.raises(ValueError):
            KeyLedger().record_produced(-1)


class TestAuthenticatedChannel:
    def test_roundtrip_and_consumption(self):
        # Hash key (64) plus pad (64) for the first message, pad only
        # for each following one.
        pool = AuthKeyPool.fresh(RandomSource(24), 1024)
        channel = AuthenticatedChannel(pool)
        m1 = channel.send(b"first")
        assert pool.ledger.consumed_bits == 128
        m2 = channel.send(b"second")
        assert pool.ledger.consumed_bits == 192
        assert channel.deliver(m1) == b"first"
        assert channel.deliver(m2) == b"second"
        assert channel.messages_sent == 2
        assert [m.payload for m in channel.transcript] == [b"first",
                                                           b"second"]

    def test_tamper_detected(self):
        pool = AuthKeyPool.fresh(RandomSource(25), 1024)
        channel = AuthenticatedChannel(pool)
        msg = channel.send(b"basis list")
        forged = AuthenticatedMessage(b"basis lisp", msg.tag)
        with pytest.raises(AuthenticationFailure):
            channel.deliver(forged)

    def test_tag_tamper_detected(self):
        pool = AuthKeyPool.fresh(RandomSource(26), 1024)
        channel = AuthenticatedChannel(pool)
        msg = channel.send(b"qber sample")
        with pytest.raises(AuthenticationFailure):
            channel.deliver(AuthenticatedMessage(msg.payload, msg.tag ^ 1))

    def test_deliver_without_send(self):
        channel = AuthenticatedChannel(AuthKeyPool.fresh(RandomSource(27),
                                                         256))
        with pytest.raises(AuthenticationFailure):
            channel.deliver(AuthenticatedMessage(b"spoof", 0))

    def test_send_fails_when_pool_dry(self):
        pool = AuthKeyPool.fresh(RandomSource(28), 130)
        channel = AuthenticatedChannel(pool)
        channel.send(b"ok")
        with pytest.raises(KeyExhausted):
            channel.send(b"no pad left")

    def test_tags_reproducible_from_pool_bits(self):
        # The channel's tag must equal a direct computation from the
        # same pool prefix: 64 hash-key bits then 64 pad bits.
        bits = RandomSource(29).bits(256)
        channel = AuthenticatedChannel(AuthKeyPool(bits.copy()))
        msg = channel.send(b"transcript")
        key = int("".join(map(str, bits[:64])), 2)
        otp = int("".join(map(str, bits[64:128])), 2)
        assert msg.tag == compute_tag(b"transcript", key, otp)
        assert verify_tag(msg, key, otp)
