"""
Run report: what happened, what should have happened, and what the attacks recovered.

The report is plain JSON-ready data so emit/parse keeps it unchanged.
"""

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Set, Tuple, Union

from ensim.protocol.authority import DiagnosisKeyServer
from ensim.protocol.keyschedule import MINUTES_PER_DAY

from .oracle import Edge, OracleResult

if TYPE_CHECKING:
    from .engine import RunState


logger = logging.getLogger(__name__)

REPORT_FORMATS = ('json', 'csv')
CSV_HEADER = ('id', 'notified', 'expected', 'agree')


class ReportError(Exception):
    """Raised when a report cannot be written."""
    pass


@dataclass
class RunReport:
    """Outcome of one run, compared against the oracle."""

    scenario: Dict[str, Any]
    notifications: List[Dict[str, Any]]
    oracle_diff: Dict[str, Any]
    attacks: Dict[str, Any]
    budget_audit: Dict[str, Dict[str, Any]]
    server_dump: Dict[str, Any]
    consent_audit: Dict[str, Dict[str, int]]
    retention_audit: Dict[str, Any]
    uploads: List[Dict[str, Any]] = field(default_factory=list)
    event_log: Optional[List[str]] = None

    @property
    def notified(self) -> List[str]:
        return self.oracle_diff['notified']

    @property
    def expected(self) -> List[str]:
        return self.oracle_diff['expected']

    @property
    def agrees(self) -> bool:
        return not self.oracle_diff['missed'] and not self.oracle_diff['spurious']

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if data['event_log'] is None:
            del data['event_log']
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunReport':
        return cls(**{'event_log': None, **data})


def _edges(edges: Iterable[Edge]) -> List[List[Any]]:
    return [list(e) for e in sorted(edges)]


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def recovered_edges(server: DiagnosisKeyServer) -> Set[Edge]:
    """
    Edges the server can reconstruct from its central report log.

    A reported day is attributed to the uploader of the batch it was matched
    against, provided that batch holds a key for the day.
    """
    edges = set()
    for entry in server.central_reports:
        for batch_id in entry.batch_ids:
            batch = server.batch(batch_id)
            if batch is not None and entry.day in batch.key_days():
                edges.add((entry.user_identifier, batch.uploader, entry.day))
    return edges


def _attack_section(state: 'RunState', expected: OracleResult) -> Dict[str, Any]:
    recentralizing = {
        spec.id for spec in state.scenario.devices
        if spec.app_kind == 'recentralizing' and spec.approved
    }
    recovered = recovered_edges(state.server)
    truth = {e for e in expected.contact_edges if e[0] in recentralizing}
    hits = recovered & truth

    probes = []
    correct = probed = 0
    for result in state.probe_results:
        probe_day = result.time // MINUTES_PER_DAY
        for entry in result.entries:
            should_match = expected.probe_truth.get((result.device_id, probe_day, entry.label, entry.key_day))
            row = {**entry.to_dict(), 'device_id': result.device_id, 'probe_day': probe_day, 'expected': should_match}
            probes.append(row)
            if entry.probed:
                probed += 1
                correct += int(entry.matched == should_match)

    beacons = {}
    for spec in sorted(state.scenario.beacons, key=lambda b: b.id):
        if spec.report is None:
            continue
        identified = sorted({e[0] for e in recovered if e[1] == spec.id})
        visitors = sorted({e[0] for e in truth if e[1] == spec.id})
        beacons[spec.id] = {
            'location_label': spec.location_label,
            'identified': identified,
            'expected': visitors,
            'all_visitors': sorted({e[0] for e in expected.contact_edges if e[1] == spec.id}),
            'recall': _ratio(len(set(identified) & set(visitors)), len(visitors)),
        }

    return {
        'central_report_edges': {
            'recovered': _edges(recovered),
            'expected': _edges(truth),
            'precision': _ratio(len(hits), len(recovered)),
            'recall': _ratio(len(hits), len(truth)),
        },
        'probes': probes,
        'probe_accuracy': _ratio(correct, probed),
        'beacon_visitors_identified': beacons,
    }


def build_report(state: 'RunState', expected: OracleResult, include_event_log: bool = False) -> RunReport:
    """
    Assemble the report of a finished run.

    Args:
        state: Final state of the event loop
        expected: Oracle result for the same scenario
        include_event_log: Attach the human-readable event log

    Returns:
        RunReport
    """
    scenario = state.scenario
    notified = sorted({n.device_id for n in state.notifications})
    expected_ids = expected.expected_notified

    budget_audit = {}
    for device_id in sorted(state.devices):
        device = state.devices[device_id]
        app = device.installed_app
        if app is None:
            continue
        budget_audit[app.app_id] = {
            'device_id': device_id,
            'kind': app.kind.value,
            'approved': app.approved,
            'allowlisted': app.allowlisted,
            'limit': device.budget.limit,
            'calls': device.budget.total_calls,
            'denied': device.budget.denied_calls,
        }

    consent_audit = {}
    for device_id in sorted(state.devices):
        prompts = state.devices[device_id].consent_log
        counts = Counter(p.purpose for p in prompts)
        consent_audit[device_id] = {
            'enable': counts['enable'],
            'retrieve': counts['retrieve'],
            'granted': sum(1 for p in prompts if p.granted),
        }

    report = RunReport(
        scenario={
            'name': scenario.name,
            'seed': scenario.seed,
            'duration_days': scenario.duration_days,
            'devices': sorted(d.id for d in scenario.devices),
            'beacons': sorted(b.id for b in scenario.beacons),
            'sightings_delivered': state.sightings_delivered,
        },
        notifications=[n.to_dict() for n in state.notifications],
        oracle_diff={
            'notified': notified,
            'expected': expected_ids,
            'missed': sorted(set(expected_ids) - set(notified)),
            'spurious': sorted(set(notified) - set(expected_ids)),
            'exposure_edges': _edges(expected.exposure_edges),
        },
        attacks=_attack_section(state, expected),
        budget_audit=budget_audit,
        server_dump=state.server.dump(),
        consent_audit=consent_audit,
        retention_audit={
            'max_sent_keys': max(state.sent_keys_by_day, default=0),
            'sent_keys_by_day': list(state.sent_keys_by_day),
            'received_records': {d: state.devices[d].received_record_count for d in sorted(state.devices)},
        },
        uploads=list(state.uploads),
        event_log=list(state.event_log) if include_event_log else None,
    )
    if not report.agrees:
        logger.warning(
            f"Scenario {scenario.name}: notifications disagree with oracle "
            f"(missed {report.oracle_diff['missed']}, spurious {report.oracle_diff['spurious']})"
        )
    return report


def _csv_rows(report: RunReport) -> List[Tuple[str, str, str, str]]:
    notified = set(report.notified)
    expected = set(report.expected)
    rows = []
    for device_id in report.scenario['devices']:
        n, e = device_id in notified, device_id in expected
        rows.append((device_id, str(n).lower(), str(e).lower(), str(n == e).lower()))
    return rows


def render(report: RunReport, fmt: str = 'json') -> str:
    """Serialize a report; JSON keys are sorted and lines end in LF."""
    if fmt == 'json':
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + '\n'
    if fmt == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        writer.writerows(_csv_rows(report))
        return buffer.getvalue()
    raise ReportError(f"Invalid format: {fmt}. Valid options: {list(REPORT_FORMATS)}")


def emit(report: RunReport, fmt: str = 'json', path: Optional[Union[str, Path]] = None) -> str:
    """
    Render a report and write it to path if given.

    Returns:
        The rendered text

    Raises:
        ReportError: On an unknown format or if the file cannot be written
    """
    text = render(report, fmt)
    if path is not None:
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
        except OSError as e:
            raise ReportError(f"Cannot write report to {path}: {e}")
        logger.info(f"Report written to {path} ({fmt})")
    return text
