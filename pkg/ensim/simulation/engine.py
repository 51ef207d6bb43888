"""
Deterministic event loop for a scenario.

Per day:
1. Day start: roll keys of enabled devices, prune S and R
2. Minute loop: scripted enablements, then on scan minutes every enabled
   device and beacon advertises and the radio delivers sightings
3. End of day: diagnosis uploads, beacon reports, coercions, probes, then
   app polls

Every loop iterates entities sorted by id, so a run is a pure function of
the scenario and its seed.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ensim.protocol.actors import (
    Beacon,
    HonestApp,
    Notification,
    ProbeResult,
    ProbingApp,
    coerced_upload,
    make_app,
)
from ensim.protocol.authority import DiagnosisKeyServer, Provenance, UploadRejectedError
from ensim.protocol.device import Device, ExposureApiError
from ensim.protocol.keyschedule import MINUTES_PER_DAY, generate_tek
from ensim.protocol.radio import broadcast
from ensim.protocol.retention import RETENTION_DAYS
from ensim.utils.rng import StreamFactory, StreamRole

from .oracle import oracle
from .report import RunReport, build_report
from .scenario import BeaconSpec, Coercion, Diagnosis, ProbeAction, Scenario


logger = logging.getLogger(__name__)


@dataclass
class RunState:
    """Everything a finished run hands to the report builder."""

    scenario: Scenario
    devices: Dict[str, Device]
    beacons: Dict[str, Beacon]
    server: DiagnosisKeyServer
    notifications: List[Notification] = field(default_factory=list)
    probe_results: List[ProbeResult] = field(default_factory=list)
    uploads: List[Dict] = field(default_factory=list)
    sent_keys_by_day: List[int] = field(default_factory=list)
    event_log: List[str] = field(default_factory=list)
    sightings_delivered: int = 0


def format_clock(minute: int) -> str:
    day, rest = divmod(minute, MINUTES_PER_DAY)
    return f"d{day:03d} {rest // 60:02d}:{rest % 60:02d}"


class Simulation:
    """
    Drives one scenario from day 0 to its last day.
    """

    def __init__(self, scenario: Scenario):
        """
        Build devices, apps, beacons and the server from the scenario.

        Args:
            scenario: Validated scenario
        """
        self.scenario = scenario
        self.schedule = scenario.schedule
        streams = StreamFactory(scenario.seed)
        self.noise = streams.stream(StreamRole.RADIO)
        self.attacker_rng = streams.stream(StreamRole.ATTACKER)

        devices = {}
        for index, spec in enumerate(sorted(scenario.devices, key=lambda d: d.id)):
            device = Device(
                spec.id,
                streams.stream(StreamRole.DEVICE, index),
                schedule=self.schedule,
                channel=scenario.channel,
                scan_period_minutes=scenario.scan_period_minutes,
                min_sightings=scenario.min_sightings,
                platform=spec.platform,
            )
            if spec.app_kind != 'none':
                device.install_app(make_app(spec.app_kind, spec.id, spec.approved, spec.allowlisted))
            devices[spec.id] = device

        beacons = {}
        for index, spec in enumerate(sorted(scenario.beacons, key=lambda b: b.id)):
            beacons[spec.id] = Beacon(
                spec.id,
                spec.location_label,
                streams.stream(StreamRole.BEACON, index),
                chosen_keys={k.day: k for k in spec.chosen_keys},
                schedule=self.schedule,
            )

        self.state = RunState(scenario, devices, beacons, DiagnosisKeyServer())
        self._enablements = self._index_enablements()
        self._proximity = self._index_proximity()

    def _index_enablements(self) -> Dict[int, List[str]]:
        enablements = defaultdict(list)
        for spec in sorted(self.scenario.devices, key=lambda d: d.id):
            if spec.enable_at_minute is not None:
                enablements[spec.enable_at_minute].append(spec.id)
        return enablements

    def _index_proximity(self) -> Dict[int, Dict[str, Dict[str, float]]]:
        """Map scan minute -> sender -> receiver -> closest distance."""
        scan = self.scenario.scan_period_minutes
        proximity: Dict[int, Dict[str, Dict[str, float]]] = defaultdict(lambda: defaultdict(dict))

        def add(sender: str, receiver: str, start: int, duration: int, distance: float):
            first_tick = -(-start // scan) * scan
            for minute in range(first_tick, start + duration, scan):
                receivers = proximity[minute][sender]
                receivers[receiver] = min(distance, receivers.get(receiver, distance))

        for contact in self.scenario.contacts:
            add(contact.device_a, contact.device_b, contact.start_minute, contact.duration_minutes, contact.distance_m)
            add(contact.device_b, contact.device_a, contact.start_minute, contact.duration_minutes, contact.distance_m)
        for visit in self.scenario.visits:
            add(visit.beacon_id, visit.device_id, visit.start_minute, visit.duration_minutes, visit.distance_m)
        return proximity

    def _log(self, minute: int, message: str):
        entry = f"[{format_clock(minute)}] {message}"
        self.state.event_log.append(entry)
        logger.info(entry)

    # -- Main loop ----------------------------------------------------------

    def execute(self) -> RunState:
        """Run every day of the scenario."""
        self._log(0, f"Starting scenario {self.scenario.name} (seed {self.scenario.seed}, "
                     f"{len(self.state.devices)} devices, {len(self.state.beacons)} beacons)")
        for day in range(self.scenario.duration_days):
            self._start_of_day(day)
            for minute in range(day * MINUTES_PER_DAY, (day + 1) * MINUTES_PER_DAY):
                self._minute(minute)
            self._end_of_day(day)
        self._log(self.scenario.total_minutes - 1,
                  f"Scenario complete: {len(self.state.notifications)} notifications, "
                  f"{len(self.state.server.batches)} batches, {self.state.sightings_delivered} sightings")
        return self.state

    def _start_of_day(self, day: int):
        for device_id in sorted(self.state.devices):
            self.state.devices[device_id].start_day(day)

    def _minute(self, minute: int):
        for device_id in self._enablements.get(minute, ()):
            device = self.state.devices[device_id]
            consent = self.scenario.device(device_id).consent_policy == 'grant'
            device.enable_exposure_notification(consent, minute, device.installed_app)
            self._log(minute, f"{device_id}: enablement prompt {'accepted' if consent else 'declined'}")

        if minute % self.scenario.scan_period_minutes == 0:
            self._tick(minute)

    def _tick(self, minute: int):
        advertised = {}
        for device_id in sorted(self.state.devices):
            epi = self.state.devices[device_id].on_tick(minute)
            if epi is not None:
                advertised[device_id] = epi
        for beacon_id in sorted(self.state.beacons):
            advertised[beacon_id] = self.state.beacons[beacon_id].tick(minute)

        nearby = self._proximity.get(minute)
        if not nearby:
            return
        for sender in sorted(nearby):
            receivers = sorted(nearby[sender].items())
            for receiver_id, sighting in broadcast(
                advertised.get(sender), receivers, self.scenario.channel, self.noise, minute, sender
            ):
                self.state.devices[receiver_id].on_sighting(sighting)
                self.state.sightings_delivered += 1

    def _end_of_day(self, day: int):
        time = (day + 1) * MINUTES_PER_DAY - 1

        for diagnosis in sorted((d for d in self.scenario.diagnoses if d.day == day), key=lambda d: d.device_id):
            self._diagnose(diagnosis, time)
        for spec in sorted((b for b in self.scenario.beacons if b.report and b.report.day == day), key=lambda b: b.id):
            self._report_beacon(spec, time)
        for coercion in sorted((c for c in self.scenario.coercions if c.day == day), key=lambda c: c.device_id):
            self._coerce(coercion, time)
        for action in (p for p in self.scenario.probes if p.day == day):
            self._probe(action, time)

        for device_id in sorted(self.state.devices):
            device = self.state.devices[device_id]
            app = device.installed_app
            if not isinstance(app, HonestApp):
                continue
            try:
                notification = app.poll(device, self.state.server, self.scenario.risk, time)
            except ExposureApiError as e:
                self._log(time, f"{app.app_id}: poll failed: {e}")
                continue
            if notification is not None:
                self.state.notifications.append(notification)
                self._log(time, f"{device_id}: notified of exposure on day {notification.day} "
                                f"(risk {notification.total_risk:g})")

        self.state.sent_keys_by_day.append(max((d.sent_key_count for d in self.state.devices.values()), default=0))

    # -- End-of-day actions ---------------------------------------------------

    def _record_upload(self, time: int, uploader: str, provenance: str, batch_id: Optional[int], outcome: str):
        self.state.uploads.append({
            'day': time // MINUTES_PER_DAY,
            'uploader': uploader,
            'provenance': provenance,
            'batch_id': batch_id,
            'outcome': outcome,
        })

    def _diagnose(self, diagnosis: Diagnosis, time: int):
        device = self.state.devices[diagnosis.device_id]
        provenance = Provenance.DIAGNOSIS.value
        try:
            keys = device.api_retrieve_keys(device.installed_app, diagnosis.consent, time)
            batch_id = self.state.server.upload_keys(keys, diagnosis.report_type, time, device.id, provenance)
        except (ExposureApiError, UploadRejectedError) as e:
            self._log(time, f"{device.id}: diagnosis upload not published: {e}")
            self._record_upload(time, device.id, provenance, None, type(e).__name__)
            return
        self._log(time, f"{device.id}: diagnosed, {len(keys)} keys published as batch {batch_id}")
        self._record_upload(time, device.id, provenance, batch_id, 'published')

    def _report_beacon(self, spec: BeaconSpec, time: int):
        beacon = self.state.beacons[spec.id]
        day = spec.report.day
        keys = beacon.keys_for_days(range(max(0, day - RETENTION_DAYS + 1), day + 1))
        batch_id = self.state.server.upload_keys(keys, spec.report.report_type, time, beacon.id, Provenance.BEACON.value)
        self._log(time, f"{beacon.id}: beacon keys reported infected as batch {batch_id}")
        self._record_upload(time, beacon.id, Provenance.BEACON.value, batch_id, 'published')

    def _coerce(self, coercion: Coercion, time: int):
        device = self.state.devices[coercion.device_id]
        batch_id = coerced_upload(device, self.state.server, time)
        outcome = 'published' if batch_id is not None else 'no-keys'
        self._log(time, f"{device.id}: COERCED upload ({outcome}, batch {batch_id})")
        self._record_upload(time, device.id, Provenance.COERCED.value, batch_id, outcome)

    def _probe(self, action: ProbeAction, time: int):
        device = self.state.devices[action.device_id]
        app = device.installed_app
        if not isinstance(app, ProbingApp):
            self._log(time, f"{action.device_id}: probe skipped, no probing app installed")
            return

        keys_of_interest = []
        for owner in action.key_owners:
            if owner in self.state.beacons:
                tek = self.state.beacons[owner].key_for_day(action.key_day)
            else:
                tek = self.state.devices[owner].key_for_day(action.key_day)
            if tek is None:
                # owner never broadcast that day; the attacker still burns a call on a dud key
                tek = generate_tek(self.attacker_rng, action.key_day)
            keys_of_interest.append((owner, tek))

        try:
            result = app.probe(device, keys_of_interest, self.scenario.risk, time)
        except ExposureApiError as e:
            self._log(time, f"{app.app_id}: probe failed: {e}")
            return
        self.state.probe_results.append(result)
        self._log(time, f"{app.app_id}: probed {len(keys_of_interest)} keys, matched {result.matched_labels}"
                        f"{' (rate limited)' if result.rate_limited else ''}")


def simulate(scenario: Scenario) -> RunState:
    """Run a scenario and return the final state."""
    return Simulation(scenario).execute()


def run(scenario: Scenario, include_event_log: bool = False) -> RunReport:
    """
    Simulate a scenario and compare the outcome with the oracle.

    Args:
        scenario: Validated scenario
        include_event_log: Attach the per-event log to the report

    Returns:
        RunReport
    """
    state = simulate(scenario)
    return build_report(state, oracle(scenario), include_event_log)
