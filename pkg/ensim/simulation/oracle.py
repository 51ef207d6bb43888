"""
Ground-truth oracle.

Computes from the scenario alone who should be notified and which
(exposed, diagnosed, day) edges exist. It shares no code path with the
event loop: no keys, no identifiers, no stores. Only plain arithmetic over
contacts, visits and uploads, with the channel evaluated at zero noise.

Stated assumptions:
- attenuation is the noiseless path loss, clamped at 0
- a device advertises and listens from its enablement minute on, if it
  consented; beacons always advertise and never listen
- an upload on day u carries one key per day in [u-13, u] on which the
  uploader had a key; all of a day's uploads are matched by the same poll
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Set, Tuple

from ensim.protocol.keyschedule import MINUTES_PER_DAY

from .scenario import Scenario


logger = logging.getLogger(__name__)

Edge = Tuple[str, str, int]
ProbeKey = Tuple[str, int, str, int]

NOTIFYING_APP_KINDS = ('honest', 'recentralizing')


@dataclass(frozen=True)
class OracleResult:
    """
    Expected outcome of a scenario.

    exposure_edges: (exposed, diagnosed, day) with risk at or above the threshold
    contact_edges: (exposed, diagnosed, day) with any positive matched risk
    per_device_expected_notification: device id -> notified?
    probe_truth: (prober, probe day, key owner, key day) -> should match?
    """

    exposure_edges: FrozenSet[Edge] = frozenset()
    contact_edges: FrozenSet[Edge] = frozenset()
    per_device_expected_notification: Dict[str, bool] = field(default_factory=dict)
    probe_truth: Dict[ProbeKey, bool] = field(default_factory=dict)

    @property
    def expected_notified(self) -> List[str]:
        return sorted(d for d, notified in self.per_device_expected_notification.items() if notified)


@dataclass(frozen=True)
class _Upload:
    day: int
    uploader: str
    report_type: str
    key_days: Tuple[int, ...]


def _noiseless_attenuation(distance_m: float, a_db: float, b_db: float) -> float:
    return max(a_db + b_db * math.log10(distance_m), 0.0)


def _ticks(start: int, duration: int, scan: int) -> Iterator[int]:
    first = -(-start // scan) * scan
    return iter(range(first, start + duration, scan))


class Oracle:
    """
    Evaluates a scenario without running the event loop.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.scan = scenario.scan_period_minutes
        self.rotation = scenario.rotation_minutes
        self.devices = {d.id: d for d in scenario.devices}
        self.beacon_ids = {b.id for b in scenario.beacons}

    # -- Who hears whom ---------------------------------------------------------

    def _listening(self, device_id: str, minute: int) -> bool:
        return self.devices[device_id].enabled_at(minute)

    def _advertising(self, sender: str, minute: int) -> bool:
        if sender in self.beacon_ids:
            return True
        return self.devices[sender].enabled_at(minute)

    def _closest_distances(self) -> Dict[Tuple[str, str], Dict[int, float]]:
        """(sender, receiver) -> tick minute -> smallest distance at that minute."""
        pairs: Dict[Tuple[str, str], Dict[int, float]] = defaultdict(dict)

        def add(sender, receiver, start, duration, distance):
            ticks = pairs[(sender, receiver)]
            for minute in _ticks(start, duration, self.scan):
                ticks[minute] = min(distance, ticks.get(minute, distance))

        for c in self.scenario.contacts:
            add(c.device_a, c.device_b, c.start_minute, c.duration_minutes, c.distance_m)
            add(c.device_b, c.device_a, c.start_minute, c.duration_minutes, c.distance_m)
        for v in self.scenario.visits:
            add(v.beacon_id, v.device_id, v.start_minute, v.duration_minutes, v.distance_m)
        return pairs

    def exposure_by_day(self) -> Dict[Tuple[str, str, int], float]:
        """
        Unweighted-by-report-type risk per (sender, receiver, day).

        A rotation window counts when at least min_sightings ticks were heard
        and the closest of them was at or below the close-contact threshold.
        Every heard tick of such a window adds one scan period of exposure.
        """
        channel = self.scenario.channel
        risk = self.scenario.risk
        exposure: Dict[Tuple[str, str, int], float] = defaultdict(float)

        for (sender, receiver), ticks in sorted(self._closest_distances().items()):
            windows: Dict[Tuple[int, int], List[float]] = {}
            for minute in sorted(ticks):
                if not (self._advertising(sender, minute) and self._listening(receiver, minute)):
                    continue
                att = _noiseless_attenuation(ticks[minute], channel.a_db, channel.b_db)
                if att > channel.max_detect_db:
                    continue
                window = (minute // MINUTES_PER_DAY, (minute % MINUTES_PER_DAY) // self.rotation)
                stats = windows.setdefault(window, [0, att])
                stats[0] += 1
                stats[1] = min(stats[1], att)

            for (day, _), (count, min_att) in sorted(windows.items()):
                if count < self.scenario.min_sightings or min_att > channel.close_contact_db:
                    continue
                minutes = count * self.scan
                exposure[(sender, receiver, day)] += minutes * risk.bucket_weights[risk.bucket_of(min_att)]
        return dict(exposure)

    # -- Who publishes what -------------------------------------------------------

    def _device_key_days(self, device_id: str, upload_day: int) -> Tuple[int, ...]:
        spec = self.devices[device_id]
        if spec.consent_policy != 'grant' or spec.enable_at_minute is None:
            return ()
        first = max(spec.enable_at_minute // MINUTES_PER_DAY, upload_day - 13)
        return tuple(range(first, upload_day + 1))

    def uploads(self) -> List[_Upload]:
        uploads = []
        for d in self.scenario.diagnoses:
            if not (self.devices[d.device_id].has_api_app and d.consent):
                continue
            days = self._device_key_days(d.device_id, d.day)
            if days:
                uploads.append(_Upload(d.day, d.device_id, d.report_type, days))
        for b in self.scenario.beacons:
            if b.report is not None:
                days = tuple(range(max(0, b.report.day - 13), b.report.day + 1))
                uploads.append(_Upload(b.report.day, b.id, b.report.report_type, days))
        for c in self.scenario.coercions:
            days = self._device_key_days(c.device_id, c.day)
            if days:
                uploads.append(_Upload(c.day, c.device_id, 'confirmed-test', days))
        return uploads

    # -- Outcome -------------------------------------------------------------------

    def evaluate(self) -> OracleResult:
        risk = self.scenario.risk
        exposure = self.exposure_by_day()
        uploads = self.uploads()

        exposure_edges: Set[Edge] = set()
        contact_edges: Set[Edge] = set()
        # (receiver, upload day, contact day) -> summed risk
        daily: Dict[Tuple[str, int, int], float] = defaultdict(float)

        for upload in uploads:
            weight = risk.report_weight(upload.report_type)
            for receiver in sorted(self.devices):
                for day in upload.key_days:
                    base = exposure.get((upload.uploader, receiver, day))
                    if base is None:
                        continue
                    value = base * weight
                    daily[(receiver, upload.day, day)] += value
                    if value > 0:
                        contact_edges.add((receiver, upload.uploader, day))
                    if value >= risk.notification_threshold:
                        exposure_edges.add((receiver, upload.uploader, day))

        notified = {device_id: False for device_id in self.devices}
        for (receiver, _, _), total in daily.items():
            spec = self.devices[receiver]
            if spec.has_api_app and spec.app_kind in NOTIFYING_APP_KINDS and total >= risk.notification_threshold:
                notified[receiver] = True

        probe_truth: Dict[ProbeKey, bool] = {}
        for probe in self.scenario.probes:
            for owner in probe.key_owners:
                probe_truth[(probe.device_id, probe.day, owner, probe.key_day)] = (
                    (owner, probe.device_id, probe.key_day) in exposure
                )

        logger.debug(
            f"Oracle for {self.scenario.name}: {len(uploads)} uploads, {len(contact_edges)} contact edges, "
            f"{sum(notified.values())} expected notifications"
        )
        return OracleResult(
            exposure_edges=frozenset(exposure_edges),
            contact_edges=frozenset(contact_edges),
            per_device_expected_notification=notified,
            probe_truth=probe_truth,
        )


def oracle(scenario: Scenario) -> OracleResult:
    """Expected outcome of a scenario, computed without simulating it."""
    return Oracle(scenario).evaluate()
