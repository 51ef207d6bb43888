"""
Apps and adversarial devices built on top of the device API.

- HonestApp: polls the authority daily, matches all new keys in one call,
  notifies locally, sends nothing back.
- RecentralizingApp: matches each new batch in its own call and reports every
  positive daily summary to the server under the user's identifier, tagged
  with that batch. No consent is involved anywhere on
  that path; app approval is the only gate.
- ProbingApp: matches persons-of-interest keys one per call, learning exactly
  which key matched.
- Beacon: broadcasts identifiers derived from attacker-chosen keys at a
  fixed location; it never scans and needs no enablement.
- coerced_upload: publishes a victim's keys without asking.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from numpy.random import Generator

from .authority import DiagnosisKeyServer, Provenance
from .device import Device, RateLimitError
from .keyschedule import (
    DEFAULT_SCHEDULE,
    EphemeralProximityIdentifier,
    KeySchedule,
    TemporaryExposureKey,
    derive_day_identifiers,
    generate_tek,
)
from .riskscore import DailySummary, ReportType, RiskConfig, summarize


logger = logging.getLogger(__name__)


class AppKind(str, Enum):
    HONEST = 'honest'
    RECENTRALIZING = 'recentralizing'
    PROBING = 'probing'


@dataclass(frozen=True)
class Notification:
    """Local warning shown to the user of an exposed device."""

    device_id: str
    day: int
    total_risk: float
    issued_at: int

    def to_dict(self):
        return {
            'device_id': self.device_id,
            'day': self.day,
            'total_risk': self.total_risk,
            'issued_at': self.issued_at,
        }


class App:
    """
    An app installed on one device.

    Args:
        device_id: Device the app is installed on
        approved: Whether the platform vendor granted API access
        allowlisted: Whether the match budget is lifted to 1,000,000 calls
    """

    kind: AppKind = None

    def __init__(self, device_id: str, approved: bool = True, allowlisted: bool = False):
        self.device_id = device_id
        self.approved = approved
        self.allowlisted = allowlisted

    @property
    def app_id(self) -> str:
        return f"{self.kind.value}@{self.device_id}"

    def __repr__(self):
        return f'<{type(self).__name__} {self.app_id} approved={self.approved} allowlisted={self.allowlisted}>'


class HonestApp(App):
    """Decentralized exposure notification app."""

    kind = AppKind.HONEST

    def __init__(self, device_id: str, approved: bool = True, allowlisted: bool = False):
        super().__init__(device_id, approved, allowlisted)
        self.cursor = 0
        self.skipped_polls = 0

    def _notify(self, device: Device, summaries: Sequence[DailySummary], cfg: RiskConfig, time: int) -> Optional[Notification]:
        qualifying = [s for s in summaries if s.total_risk >= cfg.notification_threshold]
        if not qualifying:
            return None
        worst = max(qualifying, key=lambda s: (s.total_risk, s.day))
        logger.info(f"{self.app_id}: notifying user of exposure on day {worst.day} (risk {worst.total_risk})")
        return Notification(device.id, worst.day, worst.total_risk, time)

    def poll(self, device: Device, server: DiagnosisKeyServer, cfg: RiskConfig, time: int) -> Optional[Notification]:
        """
        Daily poll: download new batches, match them in one call, notify if the threshold is met.

        Returns:
            Notification or None
        """
        batches = server.download_since(self.cursor)
        if not batches:
            return None

        keys = [key for batch in batches for key in batch.keys]
        try:
            windows = device.api_match(self, keys, cfg, time)
        except RateLimitError as e:
            # cursor stays put so the keys are retried next poll
            self.skipped_polls += 1
            logger.warning(f"{self.app_id}: poll skipped: {e}")
            return None

        self.cursor = batches[-1].batch_id
        return self._notify(device, summarize(windows), cfg, time)


class RecentralizingApp(HonestApp):
    """Approved app that quietly reports match results to the server."""

    kind = AppKind.RECENTRALIZING

    def poll(self, device: Device, server: DiagnosisKeyServer, cfg: RiskConfig, time: int) -> Optional[Notification]:
        """
        Match each new batch in its own call and report its positive days.

        Every central report entry carries the single batch id it came from.
        Batches left once the match budget is spent wait for the next poll.
        """
        batches = server.download_since(self.cursor)
        windows = []
        matched_any = False
        for index, batch in enumerate(batches):
            try:
                batch_windows = device.api_match(self, batch.keys, cfg, time)
            except RateLimitError as e:
                self.skipped_polls += 1
                logger.warning(f"{self.app_id}: {len(batches) - index} batches deferred: {e}")
                break
            matched_any = True
            self.cursor = batch.batch_id
            positive = [s for s in summarize(batch_windows) if s.total_risk > 0]
            if positive:
                server.record_central_report(device.id, positive, time, (batch.batch_id,))
            windows.extend(batch_windows)

        if not matched_any:
            return None
        return self._notify(device, summarize(windows), cfg, time)


@dataclass
class ProbeEntry:
    """Outcome for one probed key."""

    label: str
    key_day: int
    probed: bool = False
    matched: Optional[bool] = None
    day: Optional[int] = None
    duration_minutes: float = 0.0

    def to_dict(self):
        return {
            'label': self.label,
            'key_day': self.key_day,
            'probed': self.probed,
            'matched': self.matched,
            'day': self.day,
            'duration_minutes': self.duration_minutes,
        }


@dataclass
class ProbeResult:
    device_id: str
    time: int
    entries: List[ProbeEntry] = field(default_factory=list)
    rate_limited: bool = False

    @property
    def matched_labels(self) -> List[str]:
        return [e.label for e in self.entries if e.matched]

    @property
    def unprobed_labels(self) -> List[str]:
        return [e.label for e in self.entries if not e.probed]

    def to_dict(self):
        return {
            'device_id': self.device_id,
            'time': self.time,
            'rate_limited': self.rate_limited,
            'entries': [e.to_dict() for e in self.entries],
        }


class ProbingApp(App):
    """App that tests keys of interest one at a time."""

    kind = AppKind.PROBING

    def probe(
        self,
        device: Device,
        keys_of_interest: Sequence[Tuple[str, TemporaryExposureKey]],
        cfg: RiskConfig,
        time: int
    ) -> ProbeResult:
        """
        Match each key in its own api_match call.

        Stops at the first rate-limit error; the remaining keys stay unprobed.

        Args:
            device: Device the app runs on
            keys_of_interest: (label, key) pairs, probed in order
            cfg: Risk configuration
            time: Simulation minute

        Returns:
            ProbeResult
        """
        result = ProbeResult(device.id, time)
        for label, tek in keys_of_interest:
            entry = ProbeEntry(label=label, key_day=tek.day)
            result.entries.append(entry)
            if result.rate_limited:
                continue
            try:
                windows = device.api_match(self, [tek], cfg, time)
            except RateLimitError as e:
                result.rate_limited = True
                logger.info(f"{self.app_id}: probing stopped at {label}: {e}")
                continue
            entry.probed = True
            entry.matched = bool(windows)
            if windows:
                entry.day = windows[0].day
                entry.duration_minutes = sum(w.duration_minutes for w in windows)

        logger.info(
            f"{self.app_id}: probed {sum(e.probed for e in result.entries)}/{len(result.entries)} keys, "
            f"matched {result.matched_labels}"
        )
        return result


APP_CLASSES = {
    AppKind.HONEST: HonestApp,
    AppKind.RECENTRALIZING: RecentralizingApp,
    AppKind.PROBING: ProbingApp,
}


def make_app(kind, device_id: str, approved: bool = True, allowlisted: bool = False) -> App:
    """
    Instantiate the app class for a kind.

    Raises:
        ValueError: If kind is unknown
    """
    try:
        app_class = APP_CLASSES[AppKind(kind)]
    except ValueError:
        raise ValueError(f"Invalid app kind: {kind}. Valid options: {[k.value for k in AppKind]}")
    return app_class(device_id, approved=approved, allowlisted=allowlisted)


class Beacon:
    """
    Fixed-location transmitter advertising identifiers from chosen keys.

    Days without a chosen key get one drawn from the beacon's own stream the
    first time they are needed.
    """

    def __init__(
        self,
        beacon_id: str,
        location_label: str,
        rng: Generator,
        chosen_keys: Optional[Mapping[int, TemporaryExposureKey]] = None,
        schedule: KeySchedule = DEFAULT_SCHEDULE
    ):
        self.id = beacon_id
        self.location_label = location_label
        self.schedule = schedule
        self._rng = rng
        self.chosen_tek_per_day: Dict[int, TemporaryExposureKey] = dict(chosen_keys or {})
        self._identifiers: Dict[int, List[EphemeralProximityIdentifier]] = {}

    def __repr__(self):
        return f'<Beacon {self.id} at {self.location_label}>'

    def key_for_day(self, day: int) -> TemporaryExposureKey:
        if day not in self.chosen_tek_per_day:
            self.chosen_tek_per_day[day] = generate_tek(self._rng, day)
        return self.chosen_tek_per_day[day]

    def keys_for_days(self, days: Sequence[int]) -> List[TemporaryExposureKey]:
        return [self.key_for_day(day) for day in days]

    def tick(self, time: int) -> EphemeralProximityIdentifier:
        """Identifier advertised at `time`; beacons are always on."""
        day = self.schedule.day_of(time)
        if day not in self._identifiers:
            self._identifiers = {day: derive_day_identifiers(self.key_for_day(day), self.schedule)}
        return self._identifiers[day][self.schedule.interval_of(time)]


def coerced_upload(
    device: Device,
    server: DiagnosisKeyServer,
    time: int,
    report_type: str = ReportType.CONFIRMED_TEST.value
) -> Optional[int]:
    """
    Publish a victim's keys as if diagnosed, bypassing app and consent.

    Returns:
        batch_id, or None when the victim has no keys to publish
    """
    keys = device.seize_keys()
    if not keys:
        logger.info(f"Coerced upload of {device.id} skipped: no keys in S")
        return None
    return server.upload_keys(keys, report_type, time, device.id, Provenance.COERCED.value)
