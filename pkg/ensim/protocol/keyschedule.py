"""
Key schedule for broadcast identities.

Each device draws one temporary exposure key (TEK) per day from its seeded
stream and derives the rotating ephemeral proximity identifiers (EPIs) it
broadcasts from that key:

    EPI(d, i) = SHA-256(key || day_be32 || interval_be32)[:16]

The derivation is public; anyone holding a TEK can rebuild the day's
identifiers, which is what both matching and the beacon adversary rely on.
"""

import struct
from dataclasses import dataclass
from typing import List

from numpy.random import Generator

from ensim.utils.crypto import truncated_sha256


MINUTES_PER_DAY = 1440
KEY_LENGTH = 16
EPI_LENGTH = 16
DEFAULT_ROTATION_MINUTES = 10
MIN_ROTATION_MINUTES = 10
MAX_ROTATION_MINUTES = 20


class KeyScheduleError(Exception):
    """Raised when a key schedule contract is violated."""
    pass


class DecodeError(KeyScheduleError):
    """Raised when wire bytes are not a valid identifier."""
    pass


@dataclass(frozen=True)
class KeySchedule:
    """Rotation settings shared by every device in a run."""

    rotation_minutes: int = DEFAULT_ROTATION_MINUTES

    def __post_init__(self):
        if not MIN_ROTATION_MINUTES <= self.rotation_minutes <= MAX_ROTATION_MINUTES:
            raise KeyScheduleError(
                f"rotation_minutes must be in [{MIN_ROTATION_MINUTES}, {MAX_ROTATION_MINUTES}], "
                f"got {self.rotation_minutes}"
            )
        if MINUTES_PER_DAY % self.rotation_minutes:
            raise KeyScheduleError(
                f"rotation_minutes must divide {MINUTES_PER_DAY}, got {self.rotation_minutes}"
            )

    @property
    def intervals_per_day(self) -> int:
        return MINUTES_PER_DAY // self.rotation_minutes

    def day_of(self, minute: int) -> int:
        return minute // MINUTES_PER_DAY

    def interval_of(self, minute: int) -> int:
        return (minute % MINUTES_PER_DAY) // self.rotation_minutes


DEFAULT_SCHEDULE = KeySchedule()


@dataclass(frozen=True)
class TemporaryExposureKey:
    """Per-day root secret of a device's broadcast identity."""

    day: int
    key: bytes

    def __post_init__(self):
        if isinstance(self.day, bool) or not isinstance(self.day, int):
            raise KeyScheduleError(f"TEK day must be an integer, got {self.day!r}")
        if self.day < 0:
            raise KeyScheduleError(f"TEK day must be non-negative, got {self.day}")
        if len(self.key) != KEY_LENGTH:
            raise KeyScheduleError(f"TEK must be {KEY_LENGTH} bytes, got {len(self.key)}")

    def hex(self) -> str:
        return self.key.hex()

    @classmethod
    def from_hex(cls, day: int, key_hex: str) -> 'TemporaryExposureKey':
        try:
            key = bytes.fromhex(key_hex)
        except (TypeError, ValueError) as e:
            raise KeyScheduleError(f"Invalid TEK hex: {e}")
        return cls(day=day, key=key)

    def __repr__(self):
        return f'<TEK day={self.day} key={self.key.hex()[:8]}...>'


@dataclass(frozen=True)
class EphemeralProximityIdentifier:
    """Rotating identifier broadcast over the radio."""

    value: bytes

    def __post_init__(self):
        if len(self.value) != EPI_LENGTH:
            raise KeyScheduleError(f"EPI must be {EPI_LENGTH} bytes, got {len(self.value)}")

    def hex(self) -> str:
        return self.value.hex()

    def __repr__(self):
        return f'<EPI {self.value.hex()[:8]}...>'


def generate_tek(rng_stream: Generator, day: int) -> TemporaryExposureKey:
    """
    Draw the temporary exposure key for a day.

    Args:
        rng_stream: The owning device's seeded stream
        day: Day index since simulation epoch

    Returns:
        TemporaryExposureKey with 16 bytes taken from rng_stream
    """
    return TemporaryExposureKey(day=day, key=rng_stream.bytes(KEY_LENGTH))


def derive_epi(
    tek: TemporaryExposureKey,
    interval: int,
    schedule: KeySchedule = DEFAULT_SCHEDULE
) -> EphemeralProximityIdentifier:
    """
    Derive the identifier broadcast during one rotation interval.

    Args:
        tek: Key of the day
        interval: Rotation interval index within the day
        schedule: Rotation settings (bounds the interval index)

    Returns:
        EphemeralProximityIdentifier

    Raises:
        KeyScheduleError: If interval is outside [0, intervals_per_day)
    """
    if not 0 <= interval < schedule.intervals_per_day:
        raise KeyScheduleError(
            f"Interval {interval} out of range [0, {schedule.intervals_per_day})"
        )

    message = tek.key + struct.pack('>II', tek.day, interval)
    return EphemeralProximityIdentifier(truncated_sha256(message, EPI_LENGTH))


def derive_day_identifiers(
    tek: TemporaryExposureKey,
    schedule: KeySchedule = DEFAULT_SCHEDULE
) -> List[EphemeralProximityIdentifier]:
    """Rebuild every identifier a key produces over its day, in interval order."""
    return [derive_epi(tek, i, schedule) for i in range(schedule.intervals_per_day)]


def encode_epi(epi: EphemeralProximityIdentifier) -> bytes:
    """Wire form of an identifier: the raw 16 bytes, no framing."""
    return bytes(epi.value)


def decode_epi(data: bytes) -> EphemeralProximityIdentifier:
    """
    Parse an identifier received over the air.

    Args:
        data: Raw advertisement payload

    Returns:
        EphemeralProximityIdentifier

    Raises:
        DecodeError: If the payload is not exactly 16 bytes
    """
    if not isinstance(data, (bytes, bytearray)):
        raise DecodeError(f"Expected bytes, got {type(data).__name__}")
    if len(data) != EPI_LENGTH:
        raise DecodeError(f"Identifier must be {EPI_LENGTH} bytes, got {len(data)}")
    return EphemeralProximityIdentifier(bytes(data))
