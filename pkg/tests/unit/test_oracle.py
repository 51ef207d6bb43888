"""
Unit tests for the ground-truth oracle (ensim/simulation/oracle.py).

The base scenario puts A and B at 1 m for 20 minutes on day 0 (two
rotation windows of 5 sightings at 45 dB, 40 risk units) and A and C at
30 m (above the close-contact threshold). A is diagnosed on day 1.
"""

import pytest

from ensim.simulation.oracle import Oracle, oracle


def contact(a, b, start, duration, distance=1.0):
    return {'device_a': a, 'device_b': b, 'start_minute': start,
            'duration_minutes': duration, 'distance_m': distance}


class TestExposure:
    """Test per-day exposure from contacts."""

    def test_close_contact(self, build_scenario):
        """Test both directions of a close contact are exposed."""
        exposure = Oracle(build_scenario()).exposure_by_day()

        assert exposure[('A', 'B', 0)] == 40.0
        assert exposure[('B', 'A', 0)] == 40.0

    def test_far_contact_excluded(self, build_scenario):
        """Test a contact above the close-contact threshold adds nothing."""
        exposure = Oracle(build_scenario()).exposure_by_day()

        assert ('A', 'C', 0) not in exposure
        assert ('C', 'A', 0) not in exposure

    def test_too_few_sightings(self, build_scenario):
        """Test a window with fewer sightings than required is dropped."""
        scenario = build_scenario(contacts=[contact('A', 'B', 600, 4)])

        assert Oracle(scenario).exposure_by_day() == {}

    def test_overlapping_contacts_use_closest(self, build_scenario):
        """Test simultaneous contacts of one pair count each tick once."""
        scenario = build_scenario(contacts=[
            contact('A', 'B', 600, 20, 1.0),
            contact('A', 'B', 600, 20, 2.0),
        ])

        assert Oracle(scenario).exposure_by_day()[('A', 'B', 0)] == 40.0

    def test_late_enablement(self, build_scenario, scenario_data):
        """Test ticks before the receiver enables are not heard."""
        devices = scenario_data['devices']
        devices[1]['enable_at_minute'] = 615
        scenario = build_scenario(devices=devices)

        assert ('A', 'B', 0) not in Oracle(scenario).exposure_by_day()

    def test_beacon_advertises(self, build_scenario):
        """Test beacon visits expose the visitor."""
        scenario = build_scenario(
            beacons=[{'id': 'X'}],
            visits=[{'device_id': 'C', 'beacon_id': 'X', 'start_minute': 100, 'duration_minutes': 10}],
        )

        exposure = Oracle(scenario).exposure_by_day()
        assert exposure[('X', 'C', 0)] == 20.0
        assert ('C', 'X', 0) not in exposure


class TestUploads:
    """Test which uploads the oracle expects."""

    def test_diagnosis_key_days(self, build_scenario):
        """Test a diagnosis publishes every day since enablement."""
        uploads = Oracle(build_scenario()).uploads()

        assert len(uploads) == 1
        assert uploads[0].uploader == 'A'
        assert uploads[0].key_days == (0, 1)

    def test_key_days_capped(self, build_scenario):
        """Test at most fourteen days of keys are published."""
        scenario = build_scenario(duration_days=20, diagnoses=[{'device_id': 'A', 'day': 19}])

        assert Oracle(scenario).uploads()[0].key_days == tuple(range(6, 20))

    def test_no_consent(self, build_scenario):
        """Test a declined diagnosis uploads nothing."""
        scenario = build_scenario(diagnoses=[{'device_id': 'A', 'day': 1, 'consent': False}])

        assert Oracle(scenario).uploads() == []

    def test_unapproved_app(self, build_scenario, scenario_data):
        """Test a diagnosis without an approved app uploads nothing."""
        devices = scenario_data['devices']
        devices[0]['approved'] = False
        scenario = build_scenario(devices=devices)

        assert Oracle(scenario).uploads() == []

    def test_coercion_bypasses_app(self, build_scenario, scenario_data):
        """Test a coerced upload needs neither an app nor consent to upload."""
        devices = scenario_data['devices']
        devices[0]['app_kind'] = 'none'
        scenario = build_scenario(devices=devices, diagnoses=[], coercions=[{'device_id': 'A', 'day': 1}])

        uploads = Oracle(scenario).uploads()
        assert [(u.uploader, u.report_type, u.key_days) for u in uploads] == [('A', 'confirmed-test', (0, 1))]


class TestEvaluate:
    """Test expected notifications and edges."""

    def test_canonical(self, build_scenario):
        """Test the base scenario notifies B only."""
        result = oracle(build_scenario())

        assert result.expected_notified == ['B']
        assert result.exposure_edges == {('B', 'A', 0)}
        assert result.contact_edges == {('B', 'A', 0)}
        assert result.per_device_expected_notification == {'A': False, 'B': True, 'C': False}

    def test_stale_contact(self, build_scenario):
        """Test a contact older than the published keys is not notified."""
        scenario = build_scenario(duration_days=16, diagnoses=[{'device_id': 'A', 'day': 15}])

        result = oracle(scenario)
        assert result.expected_notified == []
        assert result.contact_edges == frozenset()

    def test_self_report_weight(self, build_scenario):
        """Test a self report halves the risk below the threshold."""
        scenario = build_scenario(
            contacts=[contact('A', 'B', 600, 10)],
            diagnoses=[{'device_id': 'A', 'day': 1, 'report_type': 'self-report'}],
        )

        result = oracle(scenario)
        assert result.expected_notified == []
        assert result.contact_edges == {('B', 'A', 0)}
        assert result.exposure_edges == frozenset()

    def test_risk_summed_across_uploaders(self, build_scenario):
        """Test risk from several uploads of one day adds up."""
        scenario = build_scenario(
            contacts=[contact('A', 'B', 600, 10), contact('C', 'B', 700, 10)],
            diagnoses=[
                {'device_id': 'A', 'day': 1, 'report_type': 'self-report'},
                {'device_id': 'C', 'day': 1, 'report_type': 'self-report'},
            ],
        )

        result = oracle(scenario)
        assert result.expected_notified == ['B']
        assert result.exposure_edges == frozenset()
        assert result.contact_edges == {('B', 'A', 0), ('B', 'C', 0)}

    def test_zero_bucket_weight(self, build_scenario):
        """Test a zero-weighted bucket produces no edge."""
        scenario = build_scenario(risk={'bucket_weights': [0, 1, 0.5, 0]})

        result = oracle(scenario)
        assert result.expected_notified == []
        assert result.contact_edges == frozenset()

    @pytest.mark.parametrize("change", [
        {'app_kind': 'none'},
        {'app_kind': 'probing'},
        {'approved': False},
        {'consent_policy': 'deny'},
    ])
    def test_receiver_cannot_be_notified(self, build_scenario, scenario_data, change):
        """Test receivers without a notifying app are never notified."""
        devices = scenario_data['devices']
        devices[1].update(change)
        scenario = build_scenario(devices=devices)

        assert oracle(scenario).expected_notified == []

    def test_beacon_report(self, build_scenario):
        """Test visitors of a reported beacon are notified."""
        scenario = build_scenario(
            diagnoses=[],
            beacons=[{'id': 'X', 'report': {'day': 1}}],
            visits=[{'device_id': 'C', 'beacon_id': 'X', 'start_minute': 100, 'duration_minutes': 10}],
        )

        result = oracle(scenario)
        assert result.expected_notified == ['C']
        assert result.exposure_edges == {('C', 'X', 0)}

    def test_probe_truth(self, build_scenario, scenario_data):
        """Test probe truth follows exposure of the prober to the key owner."""
        devices = scenario_data['devices'] + [{'id': 'P', 'app_kind': 'probing'}]
        scenario = build_scenario(
            devices=devices,
            contacts=[contact('A', 'P', 600, 20)],
            diagnoses=[],
            probes=[{'device_id': 'P', 'day': 1, 'key_owners': ['A', 'C'], 'key_day': 0}],
        )

        assert oracle(scenario).probe_truth == {('P', 1, 'A', 0): True, ('P', 1, 'C', 0): False}
