"""
Radio channel model.

Attenuation follows a log-distance path loss with optional gaussian
shadowing drawn from the run's seeded radio stream:

    attenuation_db = a_db + b_db * log10(distance_m) + N(0, noise_sigma_db)

Receivers whose attenuation exceeds max_detect_db hear nothing.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from numpy.random import Generator

from .keyschedule import EphemeralProximityIdentifier


DEFAULT_SCAN_PERIOD_MINUTES = 2


class RadioError(Exception):
    """Raised when a channel contract is violated."""
    pass


@dataclass(frozen=True)
class ChannelConfig:
    """Path loss parameters (dB)."""

    a_db: float = 45.0
    b_db: float = 20.0
    noise_sigma_db: float = 2.0
    max_detect_db: float = 90.0
    close_contact_db: float = 55.0

    def __post_init__(self):
        if self.noise_sigma_db < 0:
            raise RadioError(f"noise_sigma_db must be >= 0, got {self.noise_sigma_db}")
        if self.b_db <= 0:
            raise RadioError(f"b_db must be > 0, got {self.b_db}")
        if not self.close_contact_db < self.max_detect_db:
            raise RadioError(
                f"close_contact_db ({self.close_contact_db}) must be below "
                f"max_detect_db ({self.max_detect_db})"
            )


@dataclass(frozen=True)
class Sighting:
    """One reception of an identifier."""

    epi: EphemeralProximityIdentifier
    time: int
    attenuation_db: float


def attenuation(distance_m: float, cfg: ChannelConfig, noise: Optional[Generator] = None) -> float:
    """
    Compute the attenuation for a sender/receiver distance.

    Args:
        distance_m: Distance in meters (> 0)
        cfg: Channel parameters
        noise: Seeded stream for shadowing; required when noise_sigma_db > 0

    Returns:
        Attenuation in dB, clamped at 0

    Raises:
        RadioError: If distance is not positive or noise is missing
    """
    if distance_m <= 0:
        raise RadioError(f"distance_m must be positive, got {distance_m}")

    value = cfg.a_db + cfg.b_db * math.log10(distance_m)
    if cfg.noise_sigma_db > 0:
        if noise is None:
            raise RadioError("A noise stream is required when noise_sigma_db > 0")
        value += float(noise.normal(0.0, cfg.noise_sigma_db))
    return max(value, 0.0)


def broadcast(
    sender_epi: Optional[EphemeralProximityIdentifier],
    receiver_distances: Iterable[Tuple[str, float]],
    cfg: ChannelConfig,
    noise: Optional[Generator],
    time: int,
    sender_id: Optional[str] = None
) -> List[Tuple[str, Sighting]]:
    """
    Deliver one advertisement to every receiver in range.

    Receivers are processed in the order given so noise draws stay
    reproducible; callers pass them sorted by id.

    Args:
        sender_epi: Identifier being advertised, None when the sender is silent
        receiver_distances: (device_id, distance_m) pairs
        cfg: Channel parameters
        noise: Seeded radio stream
        time: Simulation minute
        sender_id: Sender's own id, never delivered to

    Returns:
        List of (device_id, Sighting) for receivers within max_detect_db
    """
    if sender_epi is None:
        return []

    delivered = []
    for device_id, distance_m in receiver_distances:
        if device_id == sender_id:
            continue
        attenuation_db = attenuation(distance_m, cfg, noise)
        if attenuation_db <= cfg.max_detect_db:
            delivered.append((device_id, Sighting(sender_epi, time, attenuation_db)))
    return delivered
