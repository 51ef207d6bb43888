"""
Simulation package.

Components:
- scenario: scenario file loading and validation
- engine: deterministic event loop
- oracle: ground truth computed from the scenario alone
- report: run report, comparison and attack metrics
- demos: bundled attack demonstrations
"""

from .demos import DEMOS, DemoError, DemoOutcome, run_demo
from .engine import RunState, Simulation, run, simulate
from .oracle import OracleResult, oracle
from .report import ReportError, RunReport, build_report, emit, render
from .scenario import (
    Scenario,
    ScenarioError,
    bundled_scenario_names,
    load_bundled_scenario,
    load_scenario,
    loads_scenario,
    scenario_from_dict,
)

__all__ = [
    'DEMOS', 'DemoError', 'DemoOutcome', 'run_demo',
    'RunState', 'Simulation', 'run', 'simulate',
    'OracleResult', 'oracle',
    'ReportError', 'RunReport', 'build_report', 'emit', 'render',
    'Scenario', 'ScenarioError', 'bundled_scenario_names', 'load_bundled_scenario',
    'load_scenario', 'loads_scenario', 'scenario_from_dict',
]
