"""BB84 session engine.

A session runs the quantum phase (Alice's random bits and bases through
source, eavesdropper, fiber, and Bob's gated detectors), sifts on the
public basis announcement, estimates the error rate on a disclosed
sample, reconciles, and privacy-amplifies, with every classical message
authenticated and its key consumption tallied.

Both parties are simulated in one process, so the classical channel is
an ordered, reliable, public message log: each announcement is built
with its real content, tagged, and delivered through the authenticated
channel, and the session state both sides would compute from it is
computed once. Eve may read every message; she cannot usefully tamper
because forging a tag succeeds with probability about 2^-64.
"""

from __future__ import annotations

import math
import struct
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adversary import (EveLedger, EveStrategy, NoAttack, eve_information,
                        finalize_knowledge, intercept_batch)
from .auth import AuthenticatedChannel, AuthKeyPool, KeyLedger
from .photonics import (DOUBLE_CLICK, NO_CLICK, Basis, ClickKind,
                        ClickOutcome, DetectorPair, FiberChannel, SourceModel,
                        click, measure_batch, sample_photon_counts,
                        transmit_counts)
from .postprocess import (AttackModel, HashSeed, ReconciliationFailure,
                          SecretKey, error_correct, final_key_length,
                          privacy_amplify)
from .rng import RandomSource

MIN_RECONCILE_BITS = 16


class EmptySample(Exception):
    """The sifted key is too short to spare any sample bits."""


class SessionOutcome(Enum):
    SUCCESS = "Success"
    ABORT_QBER = "AbortQber"
    ABORT_RECONCILIATION = "AbortReconciliation"


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs; the seed makes the whole run a pure
    function of this object."""

    n_pulses: int
    source: SourceModel
    channel: FiberChannel
    detectors: DetectorPair
    seed: int
    eve: EveStrategy = NoAttack()
    sample_fraction: float = 0.1
    attack_model: AttackModel = AttackModel.COHERENT
    security_margin_bits: int = 30
    auth_pool_bits: int = 512
    double_click_random: bool = True  # False discards double clicks instead

    def __post_init__(self):
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be positive")
        if not 0.0 < self.sample_fraction < 1.0:
            raise ValueError("sample_fraction must be in (0, 1)")
        if self.security_margin_bits < 0:
            raise ValueError("security margin must be non-negative")
        if self.auth_pool_bits < 0:
            raise ValueError("auth pool size must be non-negative")


@dataclass(frozen=True)
class PulseRecord:
    """One emitted pulse as the legitimate parties see it."""

    index: int
    alice_bit: int
    alice_basis: Basis
    bob_basis: Basis
    outcome: ClickOutcome


class PulseRecords(Sequence):
    """Array-backed emission-ordered records; indexing yields PulseRecord
    views so million-pulse sessions stay in five flat arrays."""

    def __init__(self, alice_bits, alice_bases, bob_bases, kinds, click_bits):
        self.alice_bits = alice_bits
        self.alice_bases = alice_bases
        self.bob_bases = bob_bases
        self.kinds = kinds
        self.click_bits = click_bits

    def __len__(self) -> int:
        return len(self.alice_bits)

    def __getitem__(self, i: int) -> PulseRecord:
        if isinstance(i, slice):
            raise TypeError("slicing not supported; index records one at a time")
        kind = ClickKind(int(self.kinds[i]))
        if kind == ClickKind.CLICK:
            outcome = click(int(self.click_bits[i]))
        elif kind == ClickKind.DOUBLE_CLICK:
            outcome = DOUBLE_CLICK
        else:
            outcome = NO_CLICK
        return PulseRecord(int(i if i >= 0 else len(self) + i),
                           int(self.alice_bits[i]),
                           Basis(int(self.alice_bases[i])),
                           Basis(int(self.bob_bases[i])),
                           outcome)


@dataclass(frozen=True)
class SiftedKeys:
    """Position-aligned Alice/Bob bits where bases matched and Bob clicked."""

    alice_bits: np.ndarray
    bob_bits: np.ndarray
    source_indices: np.ndarray

    def __post_init__(self):
        if not (len(self.alice_bits) == len(self.bob_bits)
                == len(self.source_indices)):
            raise ValueError("sifted components must have equal length")
        if len(self.source_indices) > 1 \
                and not np.all(np.diff(self.source_indices) > 0):
            raise ValueError("source indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.alice_bits)


@dataclass(frozen=True)
class QberEstimate:
    """Disclosed-sample error estimate; the sample is removed from
    ``remaining`` and never used for key."""

    e_hat: float
    sample_size: int
    remaining: SiftedKeys
    sample_positions: np.ndarray = field(repr=False, default=None)
    alice_sample: np.ndarray = field(repr=False, default=None)
    bob_sample: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class SessionReport:
    """End-to-end accounting for one session."""

    pulses_sent: int
    clicks: int
    raw_len: int
    sifted_len: int
    e_hat: float
    leak_ec_bits: int
    final_len: int
    eve_info_fraction: float
    auth_bits_consumed: int
    outcome: SessionOutcome
    secret_key: SecretKey | None = field(repr=False, default=None)

    @property
    def secret_growth(self) -> int:
        """Produced minus consumed secret bits; negative on aborts."""
        return self.final_len - self.auth_bits_consumed


def run_quantum_phase(config: SessionConfig, rand: RandomSource,
                      eve_ledger: EveLedger | None = None) -> PulseRecords:
    """Emit, attack, transmit, and measure n_pulses; one record each.

    Double clicks are resolved to a uniform random bit unless the config
    says to keep them (they are then dropped at sifting): resolving is
    the conservative choice because discarding lets a detector-control
    attack bias the key.
    """
    n = config.n_pulses
    alice_bits = rand.split("alice_bits").bits(n)
    alice_bases = rand.split("alice_bases").bits(n)
    counts = sample_photon_counts(config.source, n, rand.split("source"))
    ledger = eve_ledger if eve_ledger is not None else EveLedger()
    counts, bits, bases = intercept_batch(
        counts, alice_bits, alice_bases, config.eve, ledger,
        rand.split("eve"))
    counts = transmit_counts(counts, config.channel, rand.split("channel"))
    bob_bases = rand.split("bob_bases").bits(n)
    kinds, click_bits = measure_batch(
        counts, bits, bases, bob_bases, config.detectors,
        config.channel.excess_flip_prob, rand.split("detector"))
    if config.double_click_random:
        doubles = kinds == int(ClickKind.DOUBLE_CLICK)
        n_doubles = int(doubles.sum())
        if n_doubles:
            click_bits[doubles] = rand.split("double_click").bits(n_doubles)
            kinds[doubles] = int(ClickKind.CLICK)
    return PulseRecords(alice_bits, alice_bases, bob_bases, kinds, click_bits)


def _record_arrays(records) -> PulseRecords:
    if isinstance(records, PulseRecords):
        return records
    n = len(records)
    arrays = PulseRecords(np.zeros(n, np.uint8), np.zeros(n, np.uint8),
                          np.zeros(n, np.uint8), np.zeros(n, np.uint8),
                          np.zeros(n, np.uint8))
    for i, r in enumerate(records):
        arrays.alice_bits[i] = r.alice_bit
        arrays.alice_bases[i] = int(r.alice_basis)
        arrays.bob_bases[i] = int(r.bob_basis)
        arrays.kinds[i] = int(r.outcome.kind)
        if r.outcome.bit is not None:
            arrays.click_bits[i] = r.outcome.bit
    return arrays


def sift(records) -> SiftedKeys:
    """Keep click positions with matching bases. Selection uses only the
    announced bases and click positions, never the measured bit values,
    so neither party learns anything new from the other's sift."""
    arrays = _record_arrays(records)
    keep = (arrays.kinds == int(ClickKind.CLICK)) \
        & (arrays.alice_bases == arrays.bob_bases)
    sel = np.nonzero(keep)[0]
    return SiftedKeys(arrays.alice_bits[sel].copy(),
                      arrays.click_bits[sel].copy(),
                      sel.astype(np.int64))


def estimate_qber(sifted: SiftedKeys, fraction: float,
                  rand: RandomSource) -> QberEstimate:
    """Disclose a uniform random ceil(fraction * len) subset, compare, and
    remove it from the key."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("sample fraction must be in (0, 1)")
    m = len(sifted)
    k = math.ceil(fraction * m)
    if k == 0:
        raise EmptySample("sifted key too short to sample")
    rel = rand.sample_indices(m, k)
    mask = np.zeros(m, dtype=bool)
    mask[rel] = True
    a, b = sifted.alice_bits[rel], sifted.bob_bits[rel]
    e_hat = float(np.mean(a != b))
    remaining = SiftedKeys(sifted.alice_bits[~mask], sifted.bob_bits[~mask],
                           sifted.source_indices[~mask])
    return QberEstimate(e_hat, k, remaining, rel, a, b)


def _pack_bits(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def run_session(config: SessionConfig) -> SessionReport:
    """Execute the full pipeline and account for every bit.

    The classical conversation is five authenticated messages: Bob's
    click report, Alice's sift-and-sample announcement, Bob's sample
    bits, Alice's reconciliation bundle (parity transcript, hash, final
    length, amplification seed), and Bob's confirmation. A session that
    aborts at the error test stops after message three.
    """
    rand = RandomSource(config.seed)
    key_ledger = KeyLedger()
    pool = AuthKeyPool(rand.split("auth_pool").bits(config.auth_pool_bits),
                       key_ledger)
    channel = AuthenticatedChannel(pool)
    eve_ledger = EveLedger()

    records = run_quantum_phase(config, rand, eve_ledger)
    kinds = records.kinds
    clicks = int((kinds != int(ClickKind.NO_CLICK)).sum())
    raw_len = int((kinds == int(ClickKind.CLICK)).sum())
    sifted = sift(records)

    # Message 1, Bob -> Alice: where he saw clicks and with which basis.
    click_idx = np.nonzero(kinds == int(ClickKind.CLICK))[0]
    channel.deliver(channel.send(
        struct.pack(">I", len(click_idx))
        + click_idx.astype(">u4").tobytes()
        + records.bob_bases[click_idx].astype(np.uint8).tobytes()))

    known = finalize_knowledge(eve_ledger, records.alice_bases,
                               sifted.source_indices)
    eve_frac = eve_information(known, sifted)

    def report(outcome, e_hat, leak=0, final=0, secret=None):
        key_ledger.record_produced(final)
        return SessionReport(config.n_pulses, clicks, raw_len, len(sifted),
                             e_hat, leak, final, eve_frac,
                             key_ledger.consumed_bits, outcome, secret)

    try:
        est = estimate_qber(sifted, config.sample_fraction,
                            rand.split("sampling"))
    except EmptySample:
        # Message 2 degenerates to an abort notice; nothing to compare.
        channel.deliver(channel.send(b"abort:empty"))
        return report(SessionOutcome.ABORT_QBER, float("nan"))

    # Message 2, Alice -> Bob: her bases at the clicks, the sample
    # positions, and her sample bits. Message 3, Bob -> Alice: his.
    channel.deliver(channel.send(
        records.alice_bases[click_idx].astype(np.uint8).tobytes()
        + struct.pack(">I", est.sample_size)
        + est.sample_positions.astype(">u4").tobytes()
        + _pack_bits(est.alice_sample)))
    channel.deliver(channel.send(_pack_bits(est.bob_sample)))

    if est.e_hat >= config.attack_model.qber_threshold:
        return report(SessionOutcome.ABORT_QBER, est.e_hat)

    remaining = est.remaining
    n_rem = len(remaining)
    if n_rem < MIN_RECONCILE_BITS:
        # Too short to reconcile; the session yields no key but did not
        # observe anything suspicious.
        channel.deliver(channel.send(b"abort:short"))
        return report(SessionOutcome.SUCCESS, est.e_hat)

    failed = False
    try:
        correction = error_correct(remaining.alice_bits, remaining.bob_bits,
                                   est.e_hat, rand.split("reconcile"))
    except ReconciliationFailure as exc:
        correction = exc.result
        failed = True
    leak = correction.leaked_bits

    final = 0 if failed else final_key_length(
        n_rem, est.e_hat, leak, config.attack_model,
        config.security_margin_bits)
    seed_bits = rand.split("pa_seed").bits(n_rem + final - 1) \
        if final > 0 else np.zeros(0, dtype=np.uint8)

    # Message 4, Alice -> Bob: parity transcript, verification hash
    # outcome, final length, and the amplification seed. Message 5,
    # Bob -> Alice: confirmation.
    channel.deliver(channel.send(
        struct.pack(">QI?", leak, final, not failed)
        + _pack_bits(correction.transcript) + _pack_bits(seed_bits)))
    channel.deliver(channel.send(b"\x01" if not failed else b"\x00"))

    if failed:
        return report(SessionOutcome.ABORT_RECONCILIATION, est.e_hat,
                      leak=leak)

    secret = None
    if final > 0:
        secret = privacy_amplify(remaining.alice_bits, final,
                                 HashSeed(seed_bits),
                                 provenance=f"session:{config.seed:#x}")
    return report(SessionOutcome.SUCCESS, est.e_hat, leak=leak, final=final,
                  secret=secret)
