"""
Bundled attack demonstrations.

Each demo runs one bundled scenario and checks that the attack did what it
is supposed to show. A failed check means the simulator regressed.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from .engine import run
from .report import RunReport
from .scenario import load_bundled_scenario


logger = logging.getLogger(__name__)


class DemoError(Exception):
    """Raised for an unknown demo name."""
    pass


@dataclass(frozen=True)
class DemoOutcome:
    name: str
    passed: bool
    failures: Tuple[str, ...]
    report: RunReport


def _check_recentralize(report: RunReport) -> List[str]:
    failures = []
    edges = report.attacks['central_report_edges']
    if not edges['recovered']:
        failures.append("server recovered no contact edges")
    if edges['precision'] != 1.0 or edges['recall'] != 1.0:
        failures.append(f"edge precision/recall {edges['precision']}/{edges['recall']}, expected 1.0/1.0")
    for app_id, audit in report.budget_audit.items():
        if audit['kind'] == 'recentralizing' and report.consent_audit[audit['device_id']]['retrieve']:
            failures.append(f"{app_id} triggered a key-sharing prompt")
    return failures


def _check_probe(report: RunReport) -> List[str]:
    failures = []
    probes = report.attacks['probes']
    if report.attacks['probe_accuracy'] != 1.0:
        failures.append(f"probe accuracy {report.attacks['probe_accuracy']}, expected 1.0")
    if not any(p['matched'] for p in probes):
        failures.append("no probed key matched")
    if not any(not p['probed'] for p in probes):
        failures.append("match budget never refused a probe")
    return failures


def _check_beacon(report: RunReport) -> List[str]:
    failures = []
    if not report.agrees:
        failures.append(f"notifications disagree with oracle: {report.oracle_diff['missed']} / {report.oracle_diff['spurious']}")
    beacons = report.attacks['beacon_visitors_identified']
    if not beacons:
        failures.append("no reported beacon")
    for beacon_id, result in beacons.items():
        if not result['identified'] or result['recall'] != 1.0:
            failures.append(f"beacon {beacon_id} identified {result['identified']}, expected {result['expected']}")
    return failures


def _check_victim(report: RunReport) -> List[str]:
    failures = []
    coerced = [b for b in report.server_dump['batches'] if b['provenance'] == 'coerced']
    if not coerced:
        failures.append("no coerced batch was published")
    if not report.notified:
        failures.append("nobody was notified")
    if not report.agrees:
        failures.append(f"notifications disagree with oracle: {report.oracle_diff['missed']} / {report.oracle_diff['spurious']}")
    for batch in coerced:
        if report.consent_audit[batch['uploader']]['retrieve']:
            failures.append(f"victim {batch['uploader']} was asked for consent")
    return failures


DEMOS: Dict[str, Tuple[str, Callable[[RunReport], List[str]]]] = {
    'recentralize': ('demo_recentralize', _check_recentralize),
    'probe': ('demo_probe', _check_probe),
    'beacon': ('demo_beacon', _check_beacon),
    'victim': ('demo_victim', _check_victim),
}


def run_demo(name: str, include_event_log: bool = False) -> DemoOutcome:
    """
    Run a bundled demo and check its expected outcome.

    Raises:
        DemoError: If no demo has that name
    """
    if name not in DEMOS:
        raise DemoError(f"Unknown demo: {name}. Valid options: {sorted(DEMOS)}")

    scenario_name, check = DEMOS[name]
    report = run(load_bundled_scenario(scenario_name), include_event_log)
    failures = tuple(check(report))
    if failures:
        logger.error(f"Demo {name} failed: {'; '.join(failures)}")
    else:
        logger.info(f"Demo {name} passed")
    return DemoOutcome(name, not failures, failures, report)
