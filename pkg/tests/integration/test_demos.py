"""
Integration tests for the bundled attack demonstrations.
"""

import pytest

from ensim.simulation.demos import DEMOS, DemoError, run_demo


pytestmark = pytest.mark.integration


class TestDemos:
    """Every demo must show its attack working."""

    @pytest.mark.parametrize("name", sorted(DEMOS))
    def test_demo_passes(self, name):
        """The demo's checks all hold."""
        outcome = run_demo(name)

        assert outcome.failures == ()
        assert outcome.passed

    def test_recentralize_edges(self):
        """The server reconstructs exactly the contact graph of its users."""
        edges = run_demo('recentralize').report.attacks['central_report_edges']

        assert edges['recovered'] == [['R1', 'D1', 0], ['R2', 'D2', 1], ['R3', 'D2', 1]]
        assert edges['recovered'] == edges['expected']

    def test_probe_matches(self):
        """The prober learns which key owners it met and runs out of budget."""
        probes = run_demo('probe').report.attacks['probes']

        assert sorted(p['label'] for p in probes if p['matched']) == ['K1', 'K3']
        assert [p['label'] for p in probes if not p['probed']] == ['K2']

    def test_beacon_identifies_visitors(self):
        """Re-centralizing visitors of the beacon are identified, honest ones are not."""
        beacon = run_demo('beacon').report.attacks['beacon_visitors_identified']['X']

        assert beacon['identified'] == ['V1', 'V2']
        assert beacon['all_visitors'] == ['V1', 'V2', 'V3']
        assert beacon['recall'] == 1.0

    def test_victim_contacts_notified(self):
        """Coerced keys notify the victim's contacts without any prompt."""
        report = run_demo('victim').report

        assert report.notified == ['B', 'C']
        assert report.consent_audit['V']['retrieve'] == 0

    def test_event_log(self):
        """The event log records the coercion."""
        outcome = run_demo('victim', include_event_log=True)

        assert any('COERCED' in line for line in outcome.report.event_log)

    def test_unknown_demo(self):
        """Unknown demo names are rejected."""
        with pytest.raises(DemoError):
            run_demo('nope')
