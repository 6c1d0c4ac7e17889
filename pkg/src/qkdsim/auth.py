"""Unconditionally secure authentication for the public classical channel.

Wegman-Carter construction: an almost-universal polynomial hash over
GF(2^64), keyed by a secret field element, with the tag encrypted by a
fresh 64-bit one-time pad. A forger who has seen any number of valid
(message, tag) pairs still succeeds with probability at most
(blocks + 1) / 2^64 per attempt, with no computational assumption.

Key material lives in an :class:`AuthKeyPool` of pre-shared or freshly
distilled secret bits. One 64-bit hash key is drawn per session and
reused across its messages; every message additionally burns a 64-bit
pad, so a session costs 128 bits for the first message and 64 for each
one after. The :class:`KeyLedger` tallies consumption against
production so a run can demonstrate net secret growth.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .gf2 import Gf64Multiplier, gf64_mul
from .rng import RandomSource

HASH_KEY_BITS = 64
TAG_BITS = 64


class KeyExhausted(Exception):
    """The pool cannot fund the requested consumption; nothing was spent."""


class AuthenticationFailure(Exception):
    """A received tag did not verify."""


@dataclass
class KeyLedger:
    """Session-level accounting of secret bits consumed vs. produced."""

    consumed_bits: int = 0
    produced_bits: int = 0
    _produced_set: bool = field(default=False, repr=False)

    def record_produced(self, n_bits: int) -> None:
        """Set the session's production once, from the final key length."""
        if self._produced_set:
            raise RuntimeError("produced_bits is set once per session")
        if n_bits < 0:
            raise ValueError("produced_bits must be non-negative")
        self.produced_bits = int(n_bits)
        self._produced_set = True


def secret_growth(ledger: KeyLedger) -> int:
    """Net secret gain of a session; negative when it consumed more
    authentication key than it produced (e.g. any aborted session)."""
    return ledger.produced_bits - ledger.consumed_bits


def _bits_to_int(bits: np.ndarray) -> int:
    """Big-endian interpretation: the first bit is the most significant."""
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


class AuthKeyPool:
    """Shared secret bits consumed strictly once, left to right.

    The cursor only ever advances, so no bit is returned twice; running
    out raises :class:`KeyExhausted` and leaves the pool untouched.
    Freshly distilled key may be deposited to fund future sessions.
    """

    def __init__(self, bits, ledger: KeyLedger | None = None):
        arr = np.array(bits, dtype=np.uint8)
        if arr.ndim != 1 or not np.all(arr <= 1):
            raise ValueError("pool bits must be a flat 0/1 array")
        self.bits = arr
        self.cursor = 0
        self.ledger = ledger if ledger is not None else KeyLedger()

    @classmethod
    def fresh(cls, rand: RandomSource, n_bits: int = 300,
              ledger: KeyLedger | None = None) -> "AuthKeyPool":
        """Pool of uniform bits standing in for the initial shared secret."""
        return cls(rand.bits(n_bits), ledger)

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.cursor

    def consume(self, n_bits: int) -> np.ndarray:
        if n_bits < 0:
            raise ValueError("cannot consume a negative bit count")
        if self.cursor + n_bits > len(self.bits):
            raise KeyExhausted(
                f"need {n_bits} bits, {self.remaining} remain")
        out = self.bits[self.cursor:self.cursor + n_bits].copy()
        self.cursor += n_bits
        self.ledger.consumed_bits += n_bits
        return out

    def consume_int(self, n_bits: int) -> int:
        return _bits_to_int(self.consume(n_bits))

    def deposit(self, bits) -> None:
        """Append freshly produced key bits for later consumption."""
        arr = np.asarray(bits, dtype=np.uint8)
        self.bits = np.concatenate([self.bits, arr])


def consume(pool: AuthKeyPool, n_bits: int) -> np.ndarray:
    """Draw the next ``n_bits`` from the pool (see AuthKeyPool.consume)."""
    return pool.consume(n_bits)


def _hash_message(message: bytes, hash_key: int, mul=None) -> int:
    """Polynomial hash: blocks m_1..m_t give sum(m_i * k^(t+1-i)), then the
    byte length is added as the k^0 coefficient so zero-padding and
    truncation change the hash."""
    if mul is None:
        step = lambda a: gf64_mul(a, hash_key)
    else:
        step = mul.mul
    acc = 0
    for i in range(0, len(message), 8):
        chunk = message[i:i + 8]
        if len(chunk) < 8:
            chunk = chunk + b"\x00" * (8 - len(chunk))
        acc = step(acc ^ int.from_bytes(chunk, "big"))
    return acc ^ len(message)


def compute_tag(message: bytes, hash_key: int, otp: int) -> int:
    """64-bit authentication tag: GF(2^64) polynomial hash XOR one-time pad."""
    mul = Gf64Multiplier(hash_key) if len(message) >= 256 else None
    return _hash_message(message, hash_key, mul) ^ (otp & ((1 << 64) - 1))


@dataclass(frozen=True)
class AuthenticatedMessage:
    """A payload with its one-time tag, as sent on the public channel."""

    payload: bytes
    tag: int

    def encode(self) -> bytes:
        """Wire framing: 4-byte big-endian payload length, payload,
        8-byte big-endian tag."""
        return struct.pack(">I", len(self.payload)) + self.payload \
            + self.tag.to_bytes(8, "big")

    @classmethod
    def decode(cls, data: bytes) -> "AuthenticatedMessage":
        if len(data) < 12:
            raise ValueError("frame shorter than header plus tag")
        (n,) = struct.unpack(">I", data[:4])
        if len(data) != 4 + n + 8:
            raise ValueError("frame length does not match header")
        return cls(data[4:4 + n], int.from_bytes(data[4 + n:], "big"))


def verify_tag(msg: AuthenticatedMessage, hash_key: int, otp: int) -> bool:
    """Recompute and compare. The comparison XORs the full words and tests
    the fold against zero, so its work does not depend on where a
    mismatch occurs."""
    expected = compute_tag(msg.payload, hash_key, otp)
    return (expected ^ msg.tag) == 0


class AuthenticatedChannel:
    """Both ends of an in-process authenticated link.

    The two parties share the pool (that is what a shared secret means),
    so the receiver derives the same one-time pad the sender used; here
    that synchronization is modeled by pairing each sent message with
    its pad under a sequence number. ``send`` consumes key bits and tags;
    ``deliver`` verifies the next message in order and raises
    :class:`AuthenticationFailure` if it was tampered with in transit.
    """

    def __init__(self, pool: AuthKeyPool):
        self.pool = pool
        self._hash_key: int | None = None
        self._mul: Gf64Multiplier | None = None
        self._pending: list[tuple[AuthenticatedMessage, int]] = []
        self.transcript: list[AuthenticatedMessage] = []
        self.messages_sent = 0

    def _ensure_hash_key(self) -> int:
        if self._hash_key is None:
            self._hash_key = self.pool.consume_int(HASH_KEY_BITS)
            self._mul = Gf64Multiplier(self._hash_key)
        return self._hash_key

    def send(self, payload: bytes) -> AuthenticatedMessage:
        key = self._ensure_hash_key()
        otp = self.pool.consume_int(TAG_BITS)
        tag = _hash_message(payload, key, self._mul) ^ otp
        msg = AuthenticatedMessage(payload, tag)
        self._pending.append((msg, otp))
        self.transcript.append(msg)
        self.messages_sent += 1
        return msg

    def deliver(self, msg: AuthenticatedMessage) -> bytes:
        if not self._pending:
            raise AuthenticationFailure("no message in flight")
        sent, otp = self._pending.pop(0)
        expected = _hash_message(msg.payload, self._hash_key, self._mul) ^ otp
        if (expected ^ msg.tag) != 0:
            raise AuthenticationFailure("tag mismatch on public channel")
        return msg.payload
