"""
Exposure notification protocol for Ensim.

This package models the decentralized exposure notification stack:
- Key schedule (daily keys, rotating identifiers, wire format)
- Radio channel (path loss, sightings)
- Device OS layer (stores S and R, retention, match API, rate limits)
- Risk scoring (exposure windows, daily summaries)
- Health-authority server (diagnosis key batches, central report log)
- Apps and adversaries (honest, re-centralizing, probing, beacons)
"""

from .keyschedule import TemporaryExposureKey, EphemeralProximityIdentifier, KeySchedule
from .radio import ChannelConfig, Sighting
from .device import Device, MatchBudget
from .riskscore import RiskConfig, ExposureWindow, DailySummary
from .authority import DiagnosisKeyServer
from .actors import HonestApp, RecentralizingApp, ProbingApp, Beacon

__all__ = [
    'TemporaryExposureKey',
    'EphemeralProximityIdentifier',
    'KeySchedule',
    'ChannelConfig',
    'Sighting',
    'Device',
    'MatchBudget',
    'RiskConfig',
    'ExposureWindow',
    'DailySummary',
    'DiagnosisKeyServer',
    'HonestApp',
    'RecentralizingApp',
    'ProbingApp',
    'Beacon'
]
