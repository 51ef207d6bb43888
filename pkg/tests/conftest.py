"""
Shared pytest fixtures for ensim tests.

This module provides fixtures for:
- Flask app and test client for the authority facade
- Seeded random streams and noiseless channels
- Devices with an installed app
- Scenario builders (dict form and validated Scenario)
- Golden identifier vectors
"""

import copy
import json
import logging
from pathlib import Path

import pytest

from ensim import create_app
from ensim.protocol.actors import make_app
from ensim.protocol.authority import DiagnosisKeyServer
from ensim.protocol.device import Device
from ensim.protocol.keyschedule import TemporaryExposureKey
from ensim.protocol.radio import ChannelConfig
from ensim.protocol.riskscore import RiskConfig
from ensim.simulation.scenario import scenario_from_dict
from ensim.utils.rng import StreamFactory, StreamRole


FIXTURES_DIR = Path(__file__).parent / 'fixtures'


@pytest.fixture(scope='function')
def authority():
    """Fresh in-process authority server."""
    return DiagnosisKeyServer()


@pytest.fixture(scope='function')
def app(authority):
    """
    Create the authority facade with test configuration.

    The app serves the `authority` fixture so tests can inspect server state.
    """
    app = create_app('testing', server=authority)
    app.config.update({
        'TESTING': True,
        'AUTHORITY_MAX_KEYS_PER_UPLOAD': 14,
    })
    yield app


@pytest.fixture(scope='function')
def client(app):
    """Flask test client for making HTTP requests."""
    return app.test_client()


@pytest.fixture
def streams():
    """Stream factory under a fixed seed."""
    return StreamFactory(1234)


@pytest.fixture
def quiet_channel():
    """Channel without shadowing noise."""
    return ChannelConfig(noise_sigma_db=0.0)


@pytest.fixture
def risk_config():
    return RiskConfig()


@pytest.fixture
def make_device(streams, quiet_channel):
    """
    Factory for enabled devices with an app installed.

    Usage: make_device('A', app_kind='honest', approved=True, allowlisted=False, enable=True, platform='ios')
    """
    counter = {'index': 0}

    def _make(device_id, app_kind='honest', approved=True, allowlisted=False, enable=True, time=0,
              platform='android'):
        device = Device(
            device_id,
            streams.stream(StreamRole.DEVICE, counter['index']),
            channel=quiet_channel,
            platform=platform,
        )
        counter['index'] += 1
        if app_kind is not None:
            device.install_app(make_app(app_kind, device_id, approved, allowlisted))
        if enable:
            device.enable_exposure_notification(True, time, device.installed_app)
        return device

    return _make


@pytest.fixture
def fixed_tek():
    """Deterministic TEK for day 0."""
    return TemporaryExposureKey(0, bytes(range(16)))


BASE_SCENARIO = {
    'schema': 1,
    'name': 'fixture',
    'seed': 99,
    'duration_days': 2,
    'channel': {'noise_sigma_db': 0.0},
    'devices': [
        {'id': 'A'},
        {'id': 'B'},
        {'id': 'C'},
    ],
    'contacts': [
        {'device_a': 'A', 'device_b': 'B', 'start_minute': 600, 'duration_minutes': 20, 'distance_m': 1.0},
        {'device_a': 'A', 'device_b': 'C', 'start_minute': 600, 'duration_minutes': 20, 'distance_m': 30.0},
    ],
    'diagnoses': [
        {'device_id': 'A', 'day': 1},
    ],
}


@pytest.fixture
def scenario_data():
    """Canonical three-device scenario as a mutable dict."""
    return copy.deepcopy(BASE_SCENARIO)


@pytest.fixture
def build_scenario(scenario_data):
    """
    Build a validated Scenario from the base dict with top-level overrides.

    Usage: build_scenario(duration_days=5, diagnoses=[...])
    """
    def _build(**overrides):
        data = copy.deepcopy(scenario_data)
        data.update(overrides)
        return scenario_from_dict(data)

    return _build


@pytest.fixture
def scenario_file(tmp_path, scenario_data):
    """Canonical scenario written to a temporary JSON file."""
    path = tmp_path / 'scenario.json'
    path.write_text(json.dumps(scenario_data), encoding='utf-8')
    return path


@pytest.fixture(scope='session')
def golden_vectors():
    """Frozen identifier derivation vectors."""
    with open(FIXTURES_DIR / 'golden_epi_vectors.json', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture(autouse=True)
def reset_package_logger():
    """Drop handlers configure_logging attached so they never outlive a captured stream."""
    yield
    package_logger = logging.getLogger('ensim')
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
        handler.close()
    package_logger.propagate = True
