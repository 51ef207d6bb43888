"""
Command-line interface.

    ensim run <scenario.json> [--seed N] [--out PATH] [--format json|csv] [--verbose]
    ensim oracle <scenario.json> [--seed N] [--out PATH]
    ensim validate <scenario.json>
    ensim demo <recentralize|probe|beacon|victim> [--out PATH] [--format json|csv] [--verbose]

Exit codes: 0 success, 1 usage error, 2 invalid scenario, 3 demo expectation failed.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from ensim import configure_logging
from ensim.config import log_level_from_env
from ensim.simulation.demos import DEMOS, run_demo
from ensim.simulation.engine import run
from ensim.simulation.oracle import oracle
from ensim.simulation.report import REPORT_FORMATS, ReportError, emit
from ensim.simulation.scenario import Scenario, ScenarioError, load_scenario
from ensim.utils.rng import MAX_SEED


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_SCENARIO = 2
EXIT_DEMO_FAILED = 3


class UsageError(Exception):
    """Raised for malformed command lines."""
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {value!r}")
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64-1], got {seed}")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='ensim', description='Deterministic exposure notification simulator')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    run_cmd = commands.add_parser('run', help='simulate a scenario and write the report')
    run_cmd.add_argument('scenario', help='scenario JSON file')
    run_cmd.add_argument('--seed', type=_seed, help='override the scenario seed')
    run_cmd.add_argument('--out', help='report path (default: stdout)')
    run_cmd.add_argument('--format', choices=REPORT_FORMATS, default='json')
    run_cmd.add_argument('--verbose', action='store_true', help='attach the event log to the report')

    oracle_cmd = commands.add_parser('oracle', help='print the expected edges and notifications')
    oracle_cmd.add_argument('scenario', help='scenario JSON file')
    oracle_cmd.add_argument('--seed', type=_seed, help='override the scenario seed')
    oracle_cmd.add_argument('--out', help='output path (default: stdout)')

    validate_cmd = commands.add_parser('validate', help='check a scenario file')
    validate_cmd.add_argument('scenario', help='scenario JSON file')

    demo_cmd = commands.add_parser('demo', help='run a bundled attack demonstration')
    demo_cmd.add_argument('name', choices=sorted(DEMOS))
    demo_cmd.add_argument('--out', help='report path (optional)')
    demo_cmd.add_argument('--format', choices=REPORT_FORMATS, default='json')
    demo_cmd.add_argument('--verbose', action='store_true', help='attach the event log to the report')
    return parser


def _load(args) -> Scenario:
    scenario = load_scenario(args.scenario)
    if getattr(args, 'seed', None) is not None:
        scenario = scenario.with_seed(args.seed)
    return scenario


def _write(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as e:
        raise ReportError(f"Cannot write {path}: {e}")


def oracle_document(scenario: Scenario) -> dict:
    result = oracle(scenario)
    return {
        'scenario': scenario.name,
        'seed': scenario.seed,
        'expected_notified': result.expected_notified,
        'exposure_edges': [list(e) for e in sorted(result.exposure_edges)],
        'contact_edges': [list(e) for e in sorted(result.contact_edges)],
        'probe_truth': [
            {'device_id': k[0], 'probe_day': k[1], 'key_owner': k[2], 'key_day': k[3], 'matched': v}
            for k, v in sorted(result.probe_truth.items())
        ],
    }


def _cmd_run(args) -> int:
    report = run(_load(args), include_event_log=args.verbose)
    text = emit(report, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"{len(report.notified)} notified, {len(report.expected)} expected, "
              f"{'agree' if report.agrees else 'DISAGREE'} -> {args.out}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    _write(json.dumps(oracle_document(_load(args)), sort_keys=True, indent=2) + '\n', args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = _load(args)
    print(f"ok: {scenario.name} ({len(scenario.devices)} devices, {len(scenario.beacons)} beacons, "
          f"{scenario.duration_days} days)")
    return EXIT_OK


def _cmd_demo(args) -> int:
    outcome = run_demo(args.name, include_event_log=args.verbose)
    if args.out is not None:
        emit(outcome.report, args.format, args.out)

    attacks = outcome.report.attacks
    if args.name == 'recentralize':
        detail = f"recovered edges {attacks['central_report_edges']['recovered']}"
    elif args.name == 'probe':
        detail = f"matched {[p['label'] for p in attacks['probes'] if p['matched']]}, accuracy {attacks['probe_accuracy']}"
    elif args.name == 'beacon':
        detail = f"identified {({b: r['identified'] for b, r in attacks['beacon_visitors_identified'].items()})}"
    else:
        detail = f"notified {outcome.report.notified}"

    if outcome.passed:
        print(f"PASS demo {args.name}: {detail}")
        return EXIT_OK
    print(f"FAIL demo {args.name}: {'; '.join(outcome.failures)}")
    return EXIT_DEMO_FAILED


COMMANDS = {
    'run': _cmd_run,
    'oracle': _cmd_oracle,
    'validate': _cmd_validate,
    'demo': _cmd_demo,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point.

    Returns:
        Process exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE

    level = log_level_from_env()
    if getattr(args, 'verbose', False):
        level = min(level, logging.INFO)
    configure_logging(level=level)

    try:
        return COMMANDS[args.command](args)
    except ScenarioError as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID_SCENARIO
    except ReportError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
