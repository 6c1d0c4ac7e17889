"""Classical key distillation.

Three stages turn a noisy sifted key into a shared secret:

* rate bounds: binary entropy, the secret fraction for the two attack
  classes, and the final-length formula that decides how much privacy
  amplification is needed;
* interactive error reconciliation in the Cascade style, with every
  publicly disclosed parity counted exactly;
* privacy amplification by binary Toeplitz hashing, a universal_2
  family with seed length n + l - 1.

All randomness used here is public coin: permutations, the verification
hash key, and the Toeplitz seed are assumed known to the adversary, and
security accounting charges for the disclosed parities instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .gf2 import poly_hash_blocks
from .rng import RandomSource

# Root of 1 - 2 h(e), located numerically to double precision.
COHERENT_THRESHOLD = 0.11002786443835955
# Root of h(1/2 + sqrt(e(1-e))) - h(e); closed form (1 - 1/sqrt(2)) / 2.
INDIVIDUAL_THRESHOLD = (1.0 - 2.0 ** -0.5) / 2.0

VERIFY_HASH_BITS = 64


class DomainError(ValueError):
    """Argument outside the mathematical domain of the operation."""


class SeedLengthMismatch(ValueError):
    """Toeplitz seed length is not input length + output length - 1."""


class ReconciliationFailure(Exception):
    """Verification hashes disagreed after the final pass.

    Carries the failed :class:`CorrectionResult` (verified=False) so the
    caller can still account for the leaked bits before aborting.
    """

    def __init__(self, result: "CorrectionResult"):
        super().__init__("verification hash mismatch after final pass")
        self.result = result


class AttackModel(Enum):
    """Eavesdropping class the security bound is computed against."""

    INDIVIDUAL = "individual"
    COHERENT = "coherent"

    @property
    def qber_threshold(self) -> float:
        """Error rate at which the secret fraction hits zero; sessions
        abort when the estimate reaches it."""
        if self is AttackModel.INDIVIDUAL:
            return INDIVIDUAL_THRESHOLD
        return COHERENT_THRESHOLD


@dataclass(frozen=True)
class CorrectionResult:
    """Bob's corrected key plus exact disclosure accounting.

    ``transcript`` is every bit the reference side put on the public
    channel, in disclosure order; leaked_bits equals its length by
    construction and tests count it independently.
    """

    corrected_key: np.ndarray
    leaked_bits: int
    passes: int
    verified: bool
    transcript: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class HashSeed:
    """The diagonals of a binary Toeplitz matrix, as one bit vector."""

    bits: np.ndarray

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def random(cls, rand: RandomSource, n: int, ell: int) -> "HashSeed":
        """Uniform seed for hashing n bits down to ell."""
        return cls(rand.bits(n + ell - 1))


@dataclass(frozen=True)
class SecretKey:
    """Privacy-amplified output key."""

    bits: np.ndarray
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.bits)


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def eve_information_bound(e: float, model: AttackModel) -> float:
    """Eve's information per sifted bit granted by the security bound."""
    if not 0.0 <= e <= 0.5:
        raise DomainError(f"error rate must be in [0, 0.5], got {e}")
    if model is AttackModel.COHERENT:
        return binary_entropy(e)
    return 1.0 - binary_entropy(0.5 + math.sqrt(e * (1.0 - e)))


def secret_fraction(e: float, model: AttackModel) -> float:
    """Asymptotic secret bits per sifted bit at error rate ``e``, assuming
    reconciliation at the Shannon limit; zero beyond the model's root."""
    if not 0.0 <= e <= 0.5:
        raise DomainError(f"error rate must be in [0, 0.5], got {e}")
    return max(0.0, 1.0 - binary_entropy(e) - eve_information_bound(e, model))


def final_key_length(n: int, e_hat: float, leaked_ec: int,
                     model: AttackModel, margin: int) -> int:
    """Length to amplify down to: n - n*tau(e) - leaked_ec - margin,
    floored and clamped at zero. tau is Eve's information per bit for
    the attack model; actual reconciliation leakage enters as counted."""
    if n < 0 or leaked_ec < 0 or margin < 0:
        raise DomainError("lengths and margin must be non-negative")
    tau = eve_information_bound(e_hat, model)
    return max(0, math.floor(n - n * tau - leaked_ec - margin))


def _verification_hash(bits: np.ndarray, hash_key: int) -> int:
    """Polynomial hash over the packed key, length appended; used by both
    parties to confirm equality after reconciliation."""
    data = np.packbits(bits).tobytes()
    blocks = [int.from_bytes(data[i:i + 8].ljust(8, b"\x00"), "big")
              for i in range(0, len(data), 8)]
    blocks.append(len(bits))
    return poly_hash_blocks(blocks, hash_key)


def error_correct(alice_key, bob_key, e_hat: float,
                  public_coins: RandomSource, *, passes: int = 4,
                  block_factor: float = 0.73,
                  min_block: int = 4) -> CorrectionResult:
    """Cascade-style interactive reconciliation (Bob corrects toward Alice).

    Each pass permutes the key with a fresh public permutation, splits it
    into blocks (first-pass size block_factor / e_hat, doubling each
    pass), and discloses Alice's block parities. Every odd block is
    bisected to one error; a fixed bit toggles the parity state of its
    blocks in all earlier passes, and those re-exposed odd blocks are
    bisected too, back-correcting errors the earlier passes missed.
    leaked_bits counts every disclosed parity plus the 64-bit
    verification hash. Raises :class:`ReconciliationFailure` when the
    hashes still disagree at the end.
    """
    alice = np.asarray(alice_key, dtype=np.uint8)
    bob = np.array(bob_key, dtype=np.uint8)
    n = len(alice)
    if len(bob) != n:
        raise ValueError("keys must have equal length")
    if n < 16:
        raise ValueError("reconciliation needs at least 16 bits")

    k1 = math.ceil(block_factor / max(e_hat, 0.01))
    k1 = min(max(k1, min_block), n)

    transcript: list[int] = []  # leaked_bits == len(transcript), always
    perms: list[np.ndarray] = []
    inv_perms: list[np.ndarray] = []
    sizes: list[int] = []
    alice_prefix: list[np.ndarray] = []
    odd: set[tuple[int, int]] = set()

    def alice_range_parity(p: int, lo: int, hi: int) -> int:
        pre = alice_prefix[p]
        return int(pre[hi] ^ pre[lo])

    def bisect(p: int, blk: int) -> int:
        """Locate one error inside an odd block, disclosing one of
        Alice's sub-parities per halving; returns the key index fixed."""
        k = sizes[p]
        lo, hi = blk * k, min((blk + 1) * k, n)
        perm = perms[p]
        while hi - lo > 1:
            mid = lo + (hi - lo + 1) // 2
            a_par = alice_range_parity(p, lo, mid)
            transcript.append(a_par)
            b_par = int(np.bitwise_xor.reduce(bob[perm[lo:mid]]))
            if a_par != b_par:
                hi = mid
            else:
                lo = mid
        return int(perm[lo])

    def toggle_blocks(j: int) -> None:
        for p in range(len(perms)):
            blk = int(inv_perms[p][j]) // sizes[p]
            key = (p, blk)
            if key in odd:
                odd.remove(key)
            else:
                odd.add(key)

    for p in range(passes):
        perm = public_coins.permutation(n)
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        k = min(k1 << p, n)
        perms.append(perm)
        inv_perms.append(inv)
        sizes.append(k)
        pre = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(alice[perm], dtype=np.int64, out=pre[1:])
        pre &= 1
        alice_prefix.append(pre)

        n_blocks = math.ceil(n / k)
        starts = np.arange(n_blocks) * k
        ends = np.minimum(starts + k, n)
        a_par = (pre[ends] ^ pre[starts]).astype(np.uint8)
        transcript.extend(int(x) for x in a_par)  # one parity per top block
        bob_pre = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(bob[perm], dtype=np.int64, out=bob_pre[1:])
        bob_pre &= 1
        b_par = (bob_pre[ends] ^ bob_pre[starts]).astype(np.uint8)
        for blk in np.nonzero(a_par != b_par)[0]:
            odd.add((p, int(blk)))

        while odd:
            q, blk = min(odd)  # smallest block size first, then position
            j = bisect(q, blk)
            bob[j] ^= 1
            toggle_blocks(j)

    hash_key = public_coins.uint64()
    alice_hash = _verification_hash(alice, hash_key)
    transcript.extend((alice_hash >> (63 - i)) & 1
                      for i in range(VERIFY_HASH_BITS))
    verified = alice_hash == _verification_hash(bob, hash_key)
    result = CorrectionResult(bob, len(transcript), passes, verified,
                              np.array(transcript, dtype=np.uint8))
    if not verified:
        raise ReconciliationFailure(result)
    return result


def privacy_amplify(key, ell: int, seed: HashSeed,
                    provenance: str = "") -> SecretKey:
    """Hash ``key`` down to ``ell`` bits with the Toeplitz matrix T given
    by ``seed``: T[j, i] = seed[(i - j) + (ell - 1)], output bit j the
    GF(2) inner product of row j with the key. The index convention is
    frozen; changing it silently changes every derived key."""
    key = np.asarray(key, dtype=np.uint8)
    n = len(key)
    sbits = np.asarray(seed.bits, dtype=np.uint8)
    if len(sbits) != n + ell - 1:
        raise SeedLengthMismatch(
            f"seed length {len(sbits)}, need {n + ell - 1} for {n}->{ell}")
    out = np.empty(ell, dtype=np.uint8)
    cols = np.arange(n)[None, :]
    chunk = 2048  # bound the materialized (rows x n) index block
    for lo in range(0, ell, chunk):
        rows = np.arange(lo, min(lo + chunk, ell))[:, None]
        block = sbits[cols - rows + (ell - 1)] & key[None, :]
        out[lo:lo + chunk] = np.bitwise_xor.reduce(block, axis=1)
    return SecretKey(out, provenance)
