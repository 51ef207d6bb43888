"""
OS-layer exposure notification service of a simulated device.

Owns the sent-key store S and the received-identifier store R, turns radio
sightings into received records, prunes both stores daily and exposes the
two-call API apps are allowed to use:

- api_retrieve_keys: returns the keys in S, user consent required on every call
- api_match: matches diagnosis keys against R, rate limited, no consent asked,
  returns scored windows only (never the key or identifier that matched)

No accessor hands R to an app.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, Iterable, List, Optional, Tuple

from numpy.random import Generator

from .keyschedule import (
    DEFAULT_SCHEDULE,
    EphemeralProximityIdentifier,
    KeySchedule,
    MINUTES_PER_DAY,
    TemporaryExposureKey,
    derive_day_identifiers,
    generate_tek,
)
from .radio import DEFAULT_SCAN_PERIOD_MINUTES, ChannelConfig, Sighting
from .retention import RECEIVED_ID_RETENTION, SENT_KEY_RETENTION, RetentionPolicy
from .riskscore import ExposureWindow, ReportType, RiskConfig, windows_from_match


logger = logging.getLogger(__name__)

DEFAULT_MIN_SIGHTINGS = 3
MATCH_CALLS_PER_DAY = 6
ALLOWLISTED_MATCH_CALLS_PER_DAY = 1_000_000
BUDGET_WINDOW_MINUTES = MINUTES_PER_DAY


class DeviceError(Exception):
    """Raised when a device contract is violated."""
    pass


class ExposureApiError(Exception):
    """Base class for errors returned by the exposure notification API."""
    pass


class ConsentDeniedError(ExposureApiError):
    """The user declined the consent prompt."""
    pass


class AccessDeniedError(ExposureApiError):
    """The calling app is not installed on this device or not approved."""
    pass


class RateLimitError(ExposureApiError):
    """The app has used up its match budget for the trailing 24 hours."""
    pass


class SentKeyStore:
    """Store S: the device's own daily keys, at most 14."""

    def __init__(self, retention: RetentionPolicy = SENT_KEY_RETENTION):
        self._keys: Dict[int, TemporaryExposureKey] = {}
        self.retention = retention

    def add(self, tek: TemporaryExposureKey):
        if tek.day in self._keys:
            raise DeviceError(f"A key for day {tek.day} is already stored")
        self._keys[tek.day] = tek

    def get(self, day: int) -> Optional[TemporaryExposureKey]:
        return self._keys.get(day)

    def keys(self) -> List[TemporaryExposureKey]:
        return [self._keys[day] for day in sorted(self._keys)]

    def prune(self, current_day: int) -> int:
        return self.retention.enforce_mapping(self._keys, current_day)

    def __len__(self):
        return len(self._keys)

    def __contains__(self, day: int):
        return day in self._keys


@dataclass
class ReceivedRecord:
    """An identifier seen often and close enough to count as a contact."""

    epi: EphemeralProximityIdentifier
    day: int
    exposure_minutes: float
    min_attenuation_db: float
    sighting_count: int
    first_seen_minute: int
    last_seen_minute: int


@dataclass
class _Pending:
    count: int
    min_attenuation_db: float
    first_seen_minute: int
    last_seen_minute: int


class ReceivedIdStore:
    """
    Store R plus the pending sightings of the current rotation window.

    Pending entries are discarded when the window closes; an identifier is
    promoted to a record once it reaches min_sightings with a close-enough
    minimum attenuation, and keeps accumulating afterwards.
    """

    def __init__(
        self,
        min_sightings: int = DEFAULT_MIN_SIGHTINGS,
        close_contact_db: float = ChannelConfig().close_contact_db,
        scan_period_minutes: int = DEFAULT_SCAN_PERIOD_MINUTES,
        retention: RetentionPolicy = RECEIVED_ID_RETENTION
    ):
        if min_sightings < 1:
            raise DeviceError(f"min_sightings must be >= 1, got {min_sightings}")
        self.min_sightings = min_sightings
        self.close_contact_db = close_contact_db
        self.scan_period_minutes = scan_period_minutes
        self.retention = retention
        self._records: Dict[EphemeralProximityIdentifier, ReceivedRecord] = {}
        self._pending: Dict[EphemeralProximityIdentifier, _Pending] = {}
        self._window: Optional[Tuple[int, int]] = None

    def close_window(self, window: Tuple[int, int]) -> int:
        """
        Move to a rotation window, discarding pending sightings of the previous one.

        Returns:
            Number of pending identifiers discarded
        """
        if window == self._window:
            return 0
        discarded = len(self._pending)
        self._pending.clear()
        self._window = window
        return discarded

    def observe(self, sighting: Sighting, window: Tuple[int, int]) -> bool:
        """
        Account for one sighting.

        Returns:
            True if this sighting promoted the identifier into R
        """
        self.close_window(window)
        day = window[0]
        record = self._records.get(sighting.epi)
        if record is not None:
            record.sighting_count += 1
            record.exposure_minutes = record.sighting_count * self.scan_period_minutes
            record.min_attenuation_db = min(record.min_attenuation_db, sighting.attenuation_db)
            record.last_seen_minute = sighting.time
            return False

        pending = self._pending.get(sighting.epi)
        if pending is None:
            pending = _Pending(0, sighting.attenuation_db, sighting.time, sighting.time)
            self._pending[sighting.epi] = pending
        pending.count += 1
        pending.min_attenuation_db = min(pending.min_attenuation_db, sighting.attenuation_db)
        pending.last_seen_minute = sighting.time

        if pending.count >= self.min_sightings and pending.min_attenuation_db <= self.close_contact_db:
            del self._pending[sighting.epi]
            self._records[sighting.epi] = ReceivedRecord(
                epi=sighting.epi,
                day=day,
                exposure_minutes=pending.count * self.scan_period_minutes,
                min_attenuation_db=pending.min_attenuation_db,
                sighting_count=pending.count,
                first_seen_minute=pending.first_seen_minute,
                last_seen_minute=pending.last_seen_minute,
            )
            return True
        return False

    def lookup(self, epis: Iterable[EphemeralProximityIdentifier]) -> List[ReceivedRecord]:
        return [self._records[epi] for epi in epis if epi in self._records]

    def prune(self, current_day: int) -> int:
        expired = self.retention.enforce(self._records.values(), lambda r: r.day, current_day)
        for record in expired:
            del self._records[record.epi]
        return len(expired)

    def __len__(self):
        return len(self._records)

    def __contains__(self, epi: EphemeralProximityIdentifier):
        return epi in self._records


class MatchBudget:
    """
    Rolling 24-hour budget of api_match calls for the installed app.

    Non-allowlisted apps get 6 calls per trailing 24 hours, allowlisted apps
    1,000,000.
    """

    def __init__(self, allowlisted: bool = False, window_minutes: int = BUDGET_WINDOW_MINUTES):
        self.allowlisted = allowlisted
        self.window_minutes = window_minutes
        self.call_times: Deque[int] = deque()
        self.total_calls = 0
        self.denied_calls = 0

    @property
    def limit(self) -> int:
        return ALLOWLISTED_MATCH_CALLS_PER_DAY if self.allowlisted else MATCH_CALLS_PER_DAY

    def _expire(self, time: int):
        cutoff = time - self.window_minutes
        while self.call_times and self.call_times[0] <= cutoff:
            self.call_times.popleft()

    def calls_in_window(self, time: int) -> int:
        cutoff = time - self.window_minutes
        return sum(1 for t in self.call_times if t > cutoff)

    def check(self, time: int) -> bool:
        return self.calls_in_window(time) < self.limit

    def remaining(self, time: int) -> int:
        return self.limit - self.calls_in_window(time)

    def charge(self, time: int):
        """
        Record one call.

        Raises:
            RateLimitError: If the trailing window is already full
        """
        self._expire(time)
        if len(self.call_times) >= self.limit:
            self.denied_calls += 1
            raise RateLimitError(
                f"Match budget exhausted: {self.limit} calls per trailing 24 h"
            )
        self.call_times.append(time)
        self.total_calls += 1


def budget_check(budget: MatchBudget, time: int) -> bool:
    """True iff another api_match call at `time` would be within budget."""
    return budget.check(time)


@dataclass(frozen=True)
class ConsentPrompt:
    """A consent dialog shown to the user by the OS layer."""

    time: int
    purpose: str
    app_id: Optional[str]
    granted: bool


class Device:
    """
    Simulated device running the OS-layer exposure notification service.
    """

    def __init__(
        self,
        device_id: str,
        rng: Generator,
        schedule: KeySchedule = DEFAULT_SCHEDULE,
        channel: ChannelConfig = ChannelConfig(),
        scan_period_minutes: int = DEFAULT_SCAN_PERIOD_MINUTES,
        min_sightings: int = DEFAULT_MIN_SIGHTINGS,
        platform: str = 'android'
    ):
        """
        Initialize a device with exposure notification disabled.

        Args:
            device_id: Unique device identifier
            rng: The device's own seeded stream (key generation only)
            schedule: Rotation settings
            channel: Channel parameters (close-contact threshold)
            scan_period_minutes: Minutes between scans / broadcasts
            min_sightings: Sightings per window required before storing an identifier
            platform: Label only ('android' or 'ios')
        """
        self.id = device_id
        self.platform = platform
        self.schedule = schedule
        self.scan_period_minutes = scan_period_minutes
        self.en_enabled = False
        self.installed_app = None
        self.budget = MatchBudget()
        self.consent_log: List[ConsentPrompt] = []
        self.broadcast_count = 0
        self._rng = rng
        self._current_day: Optional[int] = None
        self._identifiers: Dict[int, List[EphemeralProximityIdentifier]] = {}
        self._s_store = SentKeyStore()
        self._r_store = ReceivedIdStore(
            min_sightings=min_sightings,
            close_contact_db=channel.close_contact_db,
            scan_period_minutes=scan_period_minutes,
        )

    def __repr__(self):
        return f'<Device {self.id} enabled={self.en_enabled} platform={self.platform}>'

    # -- OS-internal state -------------------------------------------------

    @property
    def current_tek(self) -> Optional[TemporaryExposureKey]:
        if self._current_day is None:
            return None
        return self._s_store.get(self._current_day)

    @property
    def sent_key_count(self) -> int:
        return len(self._s_store)

    @property
    def received_record_count(self) -> int:
        return len(self._r_store)

    def key_for_day(self, day: int) -> Optional[TemporaryExposureKey]:
        """Key S holds for `day`, for the harness only; apps go through api_retrieve_keys."""
        return self._s_store.get(day)

    def install_app(self, app):
        """Install an app; its allowlist flag sizes the match budget."""
        self.installed_app = app
        self.budget = MatchBudget(allowlisted=bool(getattr(app, 'allowlisted', False)))

    def _roll_key(self, day: int):
        if day not in self._s_store:
            tek = generate_tek(self._rng, day)
            self._s_store.add(tek)
            self._identifiers = {day: derive_day_identifiers(tek, self.schedule)}
            logger.debug(f"{self.id}: new TEK for day {day}")
        self._current_day = day

    # -- Lifecycle ----------------------------------------------------------

    def enable_exposure_notification(self, user_consent: bool, time: int = 0, app=None) -> 'Device':
        """
        Ask the user to enable exposure notification.

        The first enablement generates the key for the current day.
        Declining leaves the device silent.
        """
        self.consent_log.append(ConsentPrompt(time, 'enable', getattr(app, 'app_id', None), user_consent))
        if not user_consent or self.en_enabled:
            return self

        self.en_enabled = True
        self._roll_key(self.schedule.day_of(time))
        logger.info(f"{self.id}: exposure notification enabled at minute {time}")
        return self

    def start_day(self, day: int) -> 'Device':
        """Day boundary: roll the key while enabled, then prune both stores."""
        if self.en_enabled:
            self._roll_key(day)
        return self.prune(day)

    def prune(self, current_day: int) -> 'Device':
        """Drop keys beyond the 14 most recent days and records collected more than 14 days ago."""
        dropped_keys = self._s_store.prune(current_day)
        dropped_records = self._r_store.prune(current_day)
        if dropped_keys or dropped_records:
            logger.debug(f"{self.id}: pruned {dropped_keys} keys and {dropped_records} records on day {current_day}")
        return self

    def on_tick(self, time: int) -> Optional[EphemeralProximityIdentifier]:
        """
        Scan-period tick.

        Returns:
            The identifier to advertise now, or None while disabled
        """
        if not self.en_enabled:
            return None

        day = self.schedule.day_of(time)
        if day != self._current_day:
            self._roll_key(day)
        interval = self.schedule.interval_of(time)
        self._r_store.close_window((day, interval))
        self.broadcast_count += 1
        return self._identifiers[day][interval]

    def on_sighting(self, sighting: Sighting) -> 'Device':
        """Accumulate a received sighting; ignored while disabled."""
        if not self.en_enabled:
            return self

        window = (self.schedule.day_of(sighting.time), self.schedule.interval_of(sighting.time))
        if self._r_store.observe(sighting, window):
            logger.debug(f"{self.id}: stored {sighting.epi!r} on day {window[0]}")
        return self

    def seize_keys(self) -> List[TemporaryExposureKey]:
        """
        Read S directly, outside the app API and without a consent prompt.

        Models physical coercion of the device owner; never reachable by an app.
        """
        logger.warning(f"{self.id}: sent keys seized without consent")
        return self._s_store.keys()

    # -- App API --------------------------------------------------------------

    def _check_access(self, app):
        if app is None or app is not self.installed_app:
            raise AccessDeniedError(f"App is not installed on {self.id}")
        if not getattr(app, 'approved', False):
            raise AccessDeniedError(f"App {getattr(app, 'app_id', app)} is not approved for the exposure notification API")

    def api_retrieve_keys(self, app, user_consent: bool, time: int = 0) -> List[TemporaryExposureKey]:
        """
        Retrieve the keys in S (at most 14, today's included).

        Raises:
            AccessDeniedError: If the app is not installed or not approved
            ConsentDeniedError: If the user declines the prompt
        """
        self._check_access(app)
        self.consent_log.append(ConsentPrompt(time, 'retrieve', app.app_id, user_consent))
        if not user_consent:
            raise ConsentDeniedError(f"User on {self.id} declined sharing exposure keys")
        return self._s_store.keys()

    def api_match(self, app, diagnosis_keys: Iterable, risk_config: RiskConfig, time: int = 0) -> List[ExposureWindow]:
        """
        Match diagnosis keys against R.

        Each entry is a TemporaryExposureKey or an object with `tek` and
        `report_type`. Consumes one budget unit, including for an empty key list.

        Returns:
            Exposure windows (day, duration, bucket, risk); no key or identifier

        Raises:
            AccessDeniedError: If the app is not installed or not approved
            RateLimitError: If the trailing 24 h budget is exhausted
        """
        self._check_access(app)
        self.budget.charge(time)

        windows: List[ExposureWindow] = []
        for entry in diagnosis_keys:
            tek = getattr(entry, 'tek', entry)
            report_type = getattr(entry, 'report_type', ReportType.CONFIRMED_TEST)
            records = self._r_store.lookup(derive_day_identifiers(tek, self.schedule))
            if records:
                windows.extend(windows_from_match(records, risk_config, report_type, self.scan_period_minutes))
        return windows
