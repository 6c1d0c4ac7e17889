"""Physical-layer models of a faint-pulse polarization link.

The building blocks are a Poissonian faint-laser source, lossy fiber,
and a pair of gated threshold detectors. Polarization is abstracted to
a (bit, basis) pair: a matched-basis measurement is deterministic up to
an excess flip probability lumped in from channel drift, a mismatched
one sends each photon to a uniformly random detector. All randomness is
drawn from an injected :class:`~qkdsim.rng.RandomSource`, so every
operation is a pure function of its inputs and the stream state.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .rng import RandomSource


class Basis(IntEnum):
    """Measurement / preparation basis of a polarization qubit.

    RECTILINEAR encodes bit 0 as horizontal and bit 1 as vertical;
    DIAGONAL encodes bit 0 as -45 degrees and bit 1 as +45 degrees.
    """

    RECTILINEAR = 0
    DIAGONAL = 1


@dataclass(frozen=True)
class Pulse:
    """A faint laser pulse: all photons share one (bit, basis) encoding.

    photon_count = 0 is an empty slot.
    """

    photon_count: int
    bit: int
    basis: Basis

    def __post_init__(self):
        if self.photon_count < 0:
            raise ValueError(f"photon_count must be >= 0, got {self.photon_count}")
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit}")


@dataclass(frozen=True)
class SourceModel:
    """Faint-pulse source: photon number per pulse is Poisson(mu)."""

    mu: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mean photon number must be >= 0, got {self.mu}")


@dataclass(frozen=True)
class ConstantSource:
    """Test source emitting a fixed photon number every pulse."""

    photon_count: int = 1

    def __post_init__(self):
        if self.photon_count < 0:
            raise ValueError("photon_count must be >= 0")


@dataclass(frozen=True)
class FiberChannel:
    """Lossy fiber of given length and attenuation.

    excess_flip_prob lumps misalignment / polarization drift into a
    single bit-flip probability applied at matched-basis measurement.
    """

    length_km: float
    attenuation_db_per_km: float = 0.2
    excess_flip_prob: float = 0.0

    def __post_init__(self):
        if self.length_km < 0 or self.attenuation_db_per_km < 0:
            raise ValueError("fiber length and attenuation must be >= 0")
        if not 0.0 <= self.excess_flip_prob <= 0.5:
            raise ValueError("excess_flip_prob must be in [0, 0.5]")


@dataclass(frozen=True)
class DetectorPair:
    """Two gated threshold detectors, one per bit value.

    Each detector fires independently with dark_count_prob per gate even
    with no photon present.
    """

    efficiency: float = 1.0
    dark_count_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must be in [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark_count_prob must be in [0, 1)")


class ClickKind(IntEnum):
    NO_CLICK = 0
    CLICK = 1
    DOUBLE_CLICK = 2


@dataclass(frozen=True)
class ClickOutcome:
    """Result of one detector gate: no click, a click on one detector
    (carrying the measured bit), or both detectors firing."""

    kind: ClickKind
    bit: int | None = None

    @property
    def is_click(self) -> bool:
        return self.kind == ClickKind.CLICK


NO_CLICK = ClickOutcome(ClickKind.NO_CLICK)
DOUBLE_CLICK = ClickOutcome(ClickKind.DOUBLE_CLICK)


def click(bit: int) -> ClickOutcome:
    return ClickOutcome(ClickKind.CLICK, int(bit))


# -- source -----------------------------------------------------------------


def sample_photon_counts(source, n: int, rand: RandomSource) -> np.ndarray:
    """Photon numbers for n consecutive pulses."""
    if isinstance(source, ConstantSource):
        return np.full(n, source.photon_count, dtype=np.int64)
    return rand.poisson(source.mu, n).astype(np.int64)


def sample_photon_count(source, rand: RandomSource) -> int:
    """Photon number of a single pulse (Poisson(mu) for a SourceModel)."""
    return int(sample_photon_counts(source, 1, rand)[0])


# -- channel ------------------------------------------------------------------


def survival_probability(channel: FiberChannel) -> float:
    """Per-photon survival probability, 10^(-attenuation * length / 10)."""
    return float(10.0 ** (-channel.attenuation_db_per_km * channel.length_km / 10.0))


def transmit_counts(photon_counts: np.ndarray, channel: FiberChannel,
                    rand: RandomSource) -> np.ndarray:
    """Binomial thinning of photon numbers by the channel survival probability."""
    return rand.binomial(photon_counts, survival_probability(channel))


def transmit(pulse: Pulse, channel: FiberChannel, rand: RandomSource) -> Pulse:
    """Send one pulse through the fiber; each photon survives independently.

    The encoding is unchanged: drift is applied at measurement time via
    the channel's excess_flip_prob, not here.
    """
    survivors = int(transmit_counts(np.array([pulse.photon_count]), channel, rand)[0])
    return Pulse(survivors, pulse.bit, pulse.basis)


# -- detection ----------------------------------------------------------------


def measure_batch(photon_counts: np.ndarray, bits: np.ndarray, bases: np.ndarray,
                  bob_bases: np.ndarray, detectors: DetectorPair, flip_prob: float,
                  rand: RandomSource) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized gated measurement of many pulses.

    Each photon is detected with probability ``efficiency`` and lands in
    the detector for the encoded bit (flipped with ``flip_prob``) when
    Bob's basis matches the pulse basis, or in a uniformly random
    detector when it does not. Dark counts fire each detector
    independently.

    Returns (kinds, click_bits): kinds holds ClickKind values per gate,
    click_bits the measured bit where kinds == CLICK (0 elsewhere).
    """
    if not 0.0 <= flip_prob <= 0.5:
        raise ValueError("flip_prob must be in [0, 0.5]")
    n = len(photon_counts)
    detected = rand.binomial(photon_counts, detectors.efficiency)

    # photons landing in detector 1, drawn for both branches to keep the
    # stream layout independent of the basis pattern
    flipped = rand.binomial(detected, flip_prob)
    random_exit = rand.binomial(detected, 0.5)

    matched = bases == bob_bases
    in_one_matched = np.where(bits == 1, detected - flipped, flipped)
    in_one = np.where(matched, in_one_matched, random_exit)
    in_zero = detected - in_one

    dark0 = rand.random(n) < detectors.dark_count_prob
    dark1 = rand.random(n) < detectors.dark_count_prob
    fire0 = (in_zero > 0) | dark0
    fire1 = (in_one > 0) | dark1

    kinds = (fire0.astype(np.uint8) + fire1.astype(np.uint8))
    click_bits = (fire1 & ~fire0).astype(np.uint8)
    return kinds, click_bits


def measure(pulse: Pulse, bob_basis: Basis, detectors: DetectorPair,
            flip_prob: float, rand: RandomSource) -> ClickOutcome:
    """Measure a single pulse in Bob's basis."""
    kinds, bits = measure_batch(
        np.array([pulse.photon_count]),
        np.array([pulse.bit], dtype=np.uint8),
        np.array([int(pulse.basis)], dtype=np.uint8),
        np.array([int(bob_basis)], dtype=np.uint8),
        detectors, flip_prob, rand)
    kind = ClickKind(int(kinds[0]))
    if kind == ClickKind.CLICK:
        return click(int(bits[0]))
    return NO_CLICK if kind == ClickKind.NO_CLICK else DOUBLE_CLICK


def beamsplitter_random_bit(rand: RandomSource) -> int:
    """One uniform bit, modeling a single photon at a 50/50 beamsplitter.

    In hardware this is the physical random number generator; inside the
    simulation it is a draw from the injected deterministic stream.
    """
    return rand.bit()
