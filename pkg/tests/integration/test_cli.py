"""
Integration tests for the command-line interface.
"""

import json

import pytest

from ensim.cli import (
    EXIT_DEMO_FAILED,
    EXIT_INVALID_SCENARIO,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from ensim.simulation.demos import DemoOutcome
from ensim.simulation.engine import run


pytestmark = pytest.mark.integration


class TestUsage:
    """Tests for malformed command lines."""

    @pytest.mark.parametrize("argv", [
        [],
        ['bogus'],
        ['run'],
        ['demo', 'nope'],
        ['run', 'x.json', '--format', 'xml'],
        ['run', 'x.json', '--seed', 'abc'],
        ['run', 'x.json', '--seed', str(2 ** 64)],
    ])
    def test_usage_errors(self, argv, capsys):
        """Bad arguments exit with 1."""
        assert main(argv) == EXIT_USAGE
        assert capsys.readouterr().err


class TestValidate:
    """Tests for `ensim validate`."""

    def test_valid(self, scenario_file, capsys):
        """A valid file is summarized."""
        assert main(['validate', str(scenario_file)]) == EXIT_OK
        assert capsys.readouterr().out.strip() == 'ok: fixture (3 devices, 0 beacons, 2 days)'

    def test_missing_file(self, tmp_path, capsys):
        """A missing file is an invalid scenario."""
        assert main(['validate', str(tmp_path / 'missing.json')]) == EXIT_INVALID_SCENARIO
        assert 'path' in capsys.readouterr().err

    def test_invalid_field(self, tmp_path, scenario_data, capsys):
        """The offending field is named."""
        scenario_data['duration_days'] = 0
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(scenario_data), encoding='utf-8')

        assert main(['validate', str(path)]) == EXIT_INVALID_SCENARIO
        assert 'duration_days' in capsys.readouterr().err

    def test_risk_field_not_a_list(self, tmp_path, scenario_data, capsys):
        """A scalar where a list of weights belongs is an invalid scenario."""
        scenario_data['risk'] = {'bucket_weights': 5}
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(scenario_data), encoding='utf-8')

        assert main(['validate', str(path)]) == EXIT_INVALID_SCENARIO
        assert 'risk.bucket_weights' in capsys.readouterr().err


class TestRun:
    """Tests for `ensim run`."""

    def test_stdout_json(self, scenario_file, capsys):
        """The report goes to stdout by default."""
        assert main(['run', str(scenario_file)]) == EXIT_OK

        report = json.loads(capsys.readouterr().out)
        assert report['oracle_diff']['notified'] == ['B']
        assert 'event_log' not in report

    def test_stdout_csv(self, scenario_file, capsys):
        """CSV lists every device."""
        assert main(['run', str(scenario_file), '--format', 'csv']) == EXIT_OK

        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'id,notified,expected,agree'
        assert len(lines) == 4

    def test_out_file(self, scenario_file, tmp_path, capsys):
        """Writing to a file prints a summary line."""
        out = tmp_path / 'report.json'

        assert main(['run', str(scenario_file), '--out', str(out), '--verbose']) == EXIT_OK

        assert capsys.readouterr().out.strip() == f'1 notified, 1 expected, agree -> {out}'
        assert json.loads(out.read_text(encoding='utf-8'))['event_log']

    def test_seed_override(self, scenario_file, capsys):
        """--seed replaces the scenario seed."""
        assert main(['run', str(scenario_file), '--seed', '7']) == EXIT_OK

        assert json.loads(capsys.readouterr().out)['scenario']['seed'] == 7

    def test_unwritable_out(self, scenario_file, tmp_path):
        """An unwritable output path is a usage error."""
        assert main(['run', str(scenario_file), '--out', str(tmp_path)]) == EXIT_USAGE

    def test_missing_scenario(self, tmp_path):
        """Running a missing file exits with 2."""
        assert main(['run', str(tmp_path / 'missing.json')]) == EXIT_INVALID_SCENARIO


class TestOracleCommand:
    """Tests for `ensim oracle`."""

    def test_document(self, scenario_file, capsys):
        """The oracle document lists expected notifications and edges."""
        assert main(['oracle', str(scenario_file)]) == EXIT_OK

        document = json.loads(capsys.readouterr().out)
        assert document['expected_notified'] == ['B']
        assert document['exposure_edges'] == [['B', 'A', 0]]
        assert document['probe_truth'] == []


class TestDemoCommand:
    """Tests for `ensim demo`."""

    @pytest.mark.parametrize("name", ['recentralize', 'probe', 'beacon', 'victim'])
    def test_pass(self, name, capsys):
        """Each demo prints PASS and exits 0."""
        assert main(['demo', name]) == EXIT_OK
        assert capsys.readouterr().out.startswith(f'PASS demo {name}:')

    def test_out_file(self, tmp_path):
        """The demo report can be written as CSV."""
        out = tmp_path / 'victim.csv'

        assert main(['demo', 'victim', '--out', str(out), '--format', 'csv']) == EXIT_OK
        assert out.read_text(encoding='utf-8').startswith('id,notified,expected,agree\n')

    def test_failure_exit_code(self, mocker, build_scenario, capsys):
        """A failed demo check exits with 3."""
        outcome = DemoOutcome('victim', False, ('nobody was notified',), run(build_scenario()))
        mocker.patch('ensim.cli.run_demo', return_value=outcome)

        assert main(['demo', 'victim']) == EXIT_DEMO_FAILED
        assert capsys.readouterr().out.strip() == 'FAIL demo victim: nobody was notified'
