"""
Scenario files: the ground-truth world a run is driven by.

A scenario is a UTF-8 JSON document with a top-level `"schema": 1` field.
Distances are in meters, times and durations in minutes, days are day
indices since the simulation epoch, attenuations in dB.
"""

import json
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from ensim.protocol.actors import AppKind
from ensim.protocol.keyschedule import KeySchedule, KeyScheduleError, MINUTES_PER_DAY, TemporaryExposureKey
from ensim.protocol.radio import DEFAULT_SCAN_PERIOD_MINUTES, ChannelConfig, RadioError
from ensim.protocol.retention import SENT_KEY_RETENTION
from ensim.protocol.device import DEFAULT_MIN_SIGHTINGS
from ensim.protocol.riskscore import ReportType, RiskConfig, RiskConfigError
from ensim.utils.rng import MAX_SEED


SCHEMA_VERSION = 1
APP_KINDS = tuple(k.value for k in AppKind) + ('none',)
CONSENT_POLICIES = ('grant', 'deny')
PLATFORMS = ('android', 'ios')
REPORT_TYPES = tuple(r.value for r in ReportType)

TOP_LEVEL_FIELDS = {
    'schema', 'name', 'description', 'seed', 'duration_days', 'rotation_minutes',
    'scan_period_minutes', 'min_sightings', 'channel', 'risk', 'devices', 'contacts',
    'diagnoses', 'beacons', 'visits', 'coercions', 'probes',
}


class ScenarioError(Exception):
    """Raised when a scenario cannot be loaded; names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    app_kind: str = AppKind.HONEST.value
    approved: bool = True
    allowlisted: bool = False
    enable_at_minute: Optional[int] = 0
    consent_policy: str = 'grant'
    platform: str = 'android'

    @property
    def has_api_app(self) -> bool:
        return self.app_kind != 'none' and self.approved

    def enabled_at(self, minute: int) -> bool:
        return (
            self.consent_policy == 'grant'
            and self.enable_at_minute is not None
            and self.enable_at_minute <= minute
        )


@dataclass(frozen=True)
class ContactEvent:
    device_a: str
    device_b: str
    start_minute: int
    duration_minutes: int
    distance_m: float


@dataclass(frozen=True)
class Diagnosis:
    device_id: str
    day: int
    report_type: str = ReportType.CONFIRMED_TEST.value
    consent: bool = True


@dataclass(frozen=True)
class BeaconReport:
    day: int
    report_type: str = ReportType.CONFIRMED_TEST.value


@dataclass(frozen=True)
class BeaconSpec:
    id: str
    location_label: str
    chosen_keys: Tuple[TemporaryExposureKey, ...] = ()
    report: Optional[BeaconReport] = None


@dataclass(frozen=True)
class Visit:
    device_id: str
    beacon_id: str
    start_minute: int
    duration_minutes: int
    distance_m: float = 1.0


@dataclass(frozen=True)
class Coercion:
    device_id: str
    day: int


@dataclass(frozen=True)
class ProbeAction:
    device_id: str
    day: int
    key_owners: Tuple[str, ...]
    key_day: int


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration_days: int
    name: str = 'scenario'
    description: str = ''
    rotation_minutes: int = KeySchedule().rotation_minutes
    scan_period_minutes: int = DEFAULT_SCAN_PERIOD_MINUTES
    min_sightings: int = DEFAULT_MIN_SIGHTINGS
    channel: ChannelConfig = ChannelConfig()
    risk: RiskConfig = RiskConfig()
    devices: Tuple[DeviceSpec, ...] = ()
    contacts: Tuple[ContactEvent, ...] = ()
    diagnoses: Tuple[Diagnosis, ...] = ()
    beacons: Tuple[BeaconSpec, ...] = ()
    visits: Tuple[Visit, ...] = ()
    coercions: Tuple[Coercion, ...] = ()
    probes: Tuple[ProbeAction, ...] = ()

    @property
    def total_minutes(self) -> int:
        return self.duration_days * MINUTES_PER_DAY

    @property
    def schedule(self) -> KeySchedule:
        return KeySchedule(self.rotation_minutes)

    def device(self, device_id: str) -> DeviceSpec:
        for spec in self.devices:
            if spec.id == device_id:
                return spec
        raise KeyError(device_id)

    def with_seed(self, seed: int) -> 'Scenario':
        _check_seed(seed, 'seed')
        return replace(self, seed=seed)


# -- Field helpers ------------------------------------------------------------

def _require(data: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
    return data[key]


def _int(value: Any, path: str, minimum: Optional[int] = None, maximum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ScenarioError(path, f"must be <= {maximum}, got {value}")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    return float(value)


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(path, f"expected true or false, got {value!r}")
    return value


def _str(value: Any, path: str, choices: Optional[Tuple[str, ...]] = None) -> str:
    if not isinstance(value, str) or not value:
        raise ScenarioError(path, f"expected a non-empty string, got {value!r}")
    if choices is not None and value not in choices:
        raise ScenarioError(path, f"{value!r} is not one of {list(choices)}")
    return value


def _list(data: Mapping[str, Any], key: str, path: Optional[str] = None) -> List[Any]:
    value = data.get(key, [])
    if not isinstance(value, list):
        raise ScenarioError(path or key, "expected a list")
    return value


def _object(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    return value


def _check_seed(value: Any, path: str) -> int:
    return _int(value, path, 0, MAX_SEED)


def _check_ref(ref: str, known: Mapping[str, Any], path: str) -> str:
    if ref not in known:
        raise ScenarioError(path, f"unknown id {ref!r}")
    return ref


def _check_span(start: int, duration: int, total: int, path: str):
    if start + duration > total:
        raise ScenarioError(path, f"event ends at minute {start + duration}, after the scenario end ({total})")


# -- Sections -----------------------------------------------------------------

def _parse_channel(data: Any) -> ChannelConfig:
    data = _object(data, 'channel')
    values = {}
    for f in fields(ChannelConfig):
        if f.name in data:
            values[f.name] = _number(data[f.name], f"channel.{f.name}")
    unknown = set(data) - set(values)
    if unknown:
        raise ScenarioError(f"channel.{sorted(unknown)[0]}", "unknown field")
    try:
        return ChannelConfig(**values)
    except RadioError as e:
        raise ScenarioError('channel', str(e))


def _parse_risk(data: Any) -> RiskConfig:
    data = _object(data, 'risk')
    values: Dict[str, Any] = {}
    if 'attenuation_buckets' in data:
        buckets = _list(data, 'attenuation_buckets', 'risk.attenuation_buckets')
        values['attenuation_buckets'] = tuple(
            _number(v, f"risk.attenuation_buckets[{i}]") for i, v in enumerate(buckets)
        )
    if 'bucket_weights' in data:
        bucket_weights = _list(data, 'bucket_weights', 'risk.bucket_weights')
        values['bucket_weights'] = tuple(
            _number(v, f"risk.bucket_weights[{i}]") for i, v in enumerate(bucket_weights)
        )
    if 'report_type_weights' in data:
        weights = _object(data['report_type_weights'], 'risk.report_type_weights')
        provided = {
            _str(k, 'risk.report_type_weights', REPORT_TYPES): _number(v, f"risk.report_type_weights.{k}")
            for k, v in weights.items()
        }
        values['report_type_weights'] = {**RiskConfig().report_type_weights, **provided}
    if 'notification_threshold' in data:
        values['notification_threshold'] = _number(data['notification_threshold'], 'risk.notification_threshold')
    unknown = set(data) - set(values)
    if unknown:
        raise ScenarioError(f"risk.{sorted(unknown)[0]}", "unknown field")
    try:
        return RiskConfig(**values)
    except RiskConfigError as e:
        raise ScenarioError('risk', str(e))


def _parse_devices(raw: List[Any], total_minutes: int) -> Tuple[DeviceSpec, ...]:
    devices = []
    for i, entry in enumerate(raw):
        path = f"devices[{i}]"
        entry = _object(entry, path)
        enable_at = entry.get('enable_at_minute', 0)
        if enable_at is not None:
            enable_at = _int(enable_at, f"{path}.enable_at_minute", 0, total_minutes - 1)
        devices.append(DeviceSpec(
            id=_str(_require(entry, 'id', path), f"{path}.id"),
            app_kind=_str(entry.get('app_kind', AppKind.HONEST.value), f"{path}.app_kind", APP_KINDS),
            approved=_bool(entry.get('approved', True), f"{path}.approved"),
            allowlisted=_bool(entry.get('allowlisted', False), f"{path}.allowlisted"),
            enable_at_minute=enable_at,
            consent_policy=_str(entry.get('consent_policy', 'grant'), f"{path}.consent_policy", CONSENT_POLICIES),
            platform=_str(entry.get('platform', 'android'), f"{path}.platform", PLATFORMS),
        ))
    return tuple(devices)


def _parse_beacons(raw: List[Any], duration_days: int) -> Tuple[BeaconSpec, ...]:
    beacons = []
    for i, entry in enumerate(raw):
        path = f"beacons[{i}]"
        entry = _object(entry, path)
        chosen = []
        for day_str, key_hex in sorted(_object(entry.get('chosen_keys', {}), f"{path}.chosen_keys").items()):
            key_path = f"{path}.chosen_keys.{day_str}"
            try:
                day = int(day_str)
            except ValueError:
                raise ScenarioError(key_path, "day keys must be integers")
            _int(day, key_path, 0, duration_days - 1)
            try:
                chosen.append(TemporaryExposureKey.from_hex(day, _str(key_hex, key_path)))
            except KeyScheduleError as e:
                raise ScenarioError(key_path, str(e))
        report = None
        if entry.get('report') is not None:
            report_data = _object(entry['report'], f"{path}.report")
            report = BeaconReport(
                day=_int(_require(report_data, 'day', f"{path}.report"), f"{path}.report.day", 0, duration_days - 1),
                report_type=_str(report_data.get('report_type', ReportType.CONFIRMED_TEST.value),
                                 f"{path}.report.report_type", REPORT_TYPES),
            )
        beacons.append(BeaconSpec(
            id=_str(_require(entry, 'id', path), f"{path}.id"),
            location_label=_str(entry.get('location_label', 'unlabeled'), f"{path}.location_label"),
            chosen_keys=tuple(sorted(chosen, key=lambda k: k.day)),
            report=report,
        ))
    return tuple(beacons)


def scenario_from_dict(data: Any) -> Scenario:
    """
    Build and validate a Scenario from parsed JSON.

    Raises:
        ScenarioError: On the first invalid field
    """
    data = _object(data, 'scenario')
    schema = _require(data, 'schema', '')
    if schema != SCHEMA_VERSION:
        raise ScenarioError('schema', f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}")
    unknown = set(data) - TOP_LEVEL_FIELDS
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown field")

    seed = _check_seed(_require(data, 'seed', ''), 'seed')
    duration_days = _int(_require(data, 'duration_days', ''), 'duration_days', 1)
    total = duration_days * MINUTES_PER_DAY

    rotation = _int(data.get('rotation_minutes', KeySchedule().rotation_minutes), 'rotation_minutes')
    try:
        KeySchedule(rotation)
    except KeyScheduleError as e:
        raise ScenarioError('rotation_minutes', str(e))
    scan = _int(data.get('scan_period_minutes', DEFAULT_SCAN_PERIOD_MINUTES), 'scan_period_minutes', 1, rotation)
    if MINUTES_PER_DAY % scan:
        raise ScenarioError('scan_period_minutes', f"must divide {MINUTES_PER_DAY}, got {scan}")
    min_sightings = _int(data.get('min_sightings', DEFAULT_MIN_SIGHTINGS), 'min_sightings', 1)

    devices = _parse_devices(_list(data, 'devices'), total)
    beacons = _parse_beacons(_list(data, 'beacons'), duration_days)
    known_devices = {d.id: d for d in devices}
    known_beacons = {b.id: b for b in beacons}
    if len(known_devices) != len(devices):
        raise ScenarioError('devices', "duplicate device id")
    if len(known_beacons) != len(beacons):
        raise ScenarioError('beacons', "duplicate beacon id")
    clash = set(known_devices) & set(known_beacons)
    if clash:
        raise ScenarioError('beacons', f"id {sorted(clash)[0]!r} is also a device id")

    contacts = []
    for i, entry in enumerate(_list(data, 'contacts')):
        path = f"contacts[{i}]"
        entry = _object(entry, path)
        a = _check_ref(_str(_require(entry, 'device_a', path), f"{path}.device_a"), known_devices, f"{path}.device_a")
        b = _check_ref(_str(_require(entry, 'device_b', path), f"{path}.device_b"), known_devices, f"{path}.device_b")
        if a == b:
            raise ScenarioError(f"{path}.device_b", "a device cannot contact itself")
        start = _int(_require(entry, 'start_minute', path), f"{path}.start_minute", 0)
        duration = _int(_require(entry, 'duration_minutes', path), f"{path}.duration_minutes", 1)
        _check_span(start, duration, total, path)
        distance = _number(_require(entry, 'distance_m', path), f"{path}.distance_m")
        if distance <= 0:
            raise ScenarioError(f"{path}.distance_m", f"must be > 0, got {distance}")
        contacts.append(ContactEvent(a, b, start, duration, distance))

    diagnoses = []
    for i, entry in enumerate(_list(data, 'diagnoses')):
        path = f"diagnoses[{i}]"
        entry = _object(entry, path)
        diagnoses.append(Diagnosis(
            device_id=_check_ref(_str(_require(entry, 'device_id', path), f"{path}.device_id"), known_devices, f"{path}.device_id"),
            day=_int(_require(entry, 'day', path), f"{path}.day", 0, duration_days - 1),
            report_type=_str(entry.get('report_type', ReportType.CONFIRMED_TEST.value), f"{path}.report_type", REPORT_TYPES),
            consent=_bool(entry.get('consent', True), f"{path}.consent"),
        ))

    visits = []
    for i, entry in enumerate(_list(data, 'visits')):
        path = f"visits[{i}]"
        entry = _object(entry, path)
        device_id = _check_ref(_str(_require(entry, 'device_id', path), f"{path}.device_id"), known_devices, f"{path}.device_id")
        beacon_id = _check_ref(_str(_require(entry, 'beacon_id', path), f"{path}.beacon_id"), known_beacons, f"{path}.beacon_id")
        start = _int(_require(entry, 'start_minute', path), f"{path}.start_minute", 0)
        duration = _int(_require(entry, 'duration_minutes', path), f"{path}.duration_minutes", 1)
        _check_span(start, duration, total, path)
        distance = _number(entry.get('distance_m', 1.0), f"{path}.distance_m")
        if distance <= 0:
            raise ScenarioError(f"{path}.distance_m", f"must be > 0, got {distance}")
        visits.append(Visit(device_id, beacon_id, start, duration, distance))

    coercions = []
    for i, entry in enumerate(_list(data, 'coercions')):
        path = f"coercions[{i}]"
        entry = _object(entry, path)
        coercions.append(Coercion(
            device_id=_check_ref(_str(_require(entry, 'device_id', path), f"{path}.device_id"), known_devices, f"{path}.device_id"),
            day=_int(_require(entry, 'day', path), f"{path}.day", 0, duration_days - 1),
        ))

    probes = []
    owners = {**known_devices, **known_beacons}
    for i, entry in enumerate(_list(data, 'probes')):
        path = f"probes[{i}]"
        entry = _object(entry, path)
        device_id = _check_ref(_str(_require(entry, 'device_id', path), f"{path}.device_id"), known_devices, f"{path}.device_id")
        if known_devices[device_id].app_kind != AppKind.PROBING.value:
            raise ScenarioError(f"{path}.device_id", f"{device_id!r} does not run a probing app")
        day = _int(_require(entry, 'day', path), f"{path}.day", 0, duration_days - 1)
        raw_owners = _require(entry, 'key_owners', path)
        if not isinstance(raw_owners, list):
            raise ScenarioError(f"{path}.key_owners", "expected a list")
        key_owners = tuple(
            _check_ref(_str(o, f"{path}.key_owners[{j}]"), owners, f"{path}.key_owners[{j}]")
            for j, o in enumerate(raw_owners)
        )
        key_day = _int(_require(entry, 'key_day', path), f"{path}.key_day", max(0, day - SENT_KEY_RETENTION.max_age_days), day)
        probes.append(ProbeAction(device_id, day, key_owners, key_day))

    return Scenario(
        seed=seed,
        duration_days=duration_days,
        name=_str(data.get('name', 'scenario'), 'name'),
        description=data.get('description', '') if isinstance(data.get('description', ''), str) else '',
        rotation_minutes=rotation,
        scan_period_minutes=scan,
        min_sightings=min_sightings,
        channel=_parse_channel(data.get('channel', {})),
        risk=_parse_risk(data.get('risk', {})),
        devices=devices,
        contacts=tuple(contacts),
        diagnoses=tuple(diagnoses),
        beacons=beacons,
        visits=tuple(visits),
        coercions=tuple(coercions),
        probes=tuple(probes),
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Load and validate a scenario file.

    Raises:
        ScenarioError: If the file is missing, not JSON, or invalid
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except FileNotFoundError:
        raise ScenarioError('path', f"scenario file not found: {path}")
    except (OSError, UnicodeDecodeError) as e:
        raise ScenarioError('path', f"cannot read {path}: {e}")
    return loads_scenario(text)


def loads_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError('json', f"parse error at line {e.lineno} column {e.colno}: {e.msg}")
    return scenario_from_dict(data)


def bundled_scenario_names() -> List[str]:
    folder = resources.files('ensim.scenarios')
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith('.json'))


def load_bundled_scenario(name: str) -> Scenario:
    """Load one of the scenarios shipped in ensim/scenarios/."""
    resource = resources.files('ensim.scenarios') / f"{name}.json"
    if not resource.is_file():
        raise ScenarioError('name', f"no bundled scenario named {name!r}")
    return loads_scenario(resource.read_text(encoding='utf-8'))
