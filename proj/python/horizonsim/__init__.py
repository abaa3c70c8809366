"""Simulator for fault-aware MPI session-model initialisation.

The heavy lifting lives in the compiled ``_core`` extension; this wrapper adds
a dict-returning runner on top of the JSON report emitter.
"""

import json

from ._core import (  # noqa: F401
    Group,
    Communicator,
    HorizonSet,
    InvalidScenarioError,
    ScenarioParseError,
    gen_dt,
    gen_ep,
    group_includes,
    group_intersects,
    run_scenario_json,
    validate_scenario,
)

__all__ = [
    "Group",
    "Communicator",
    "HorizonSet",
    "InvalidScenarioError",
    "ScenarioParseError",
    "gen_dt",
    "gen_ep",
    "group_includes",
    "group_intersects",
    "run_scenario",
    "run_scenario_json",
    "validate_scenario",
]


def run_scenario(text, mode="", seed=0, max_events=1_000_000):
    """Run a scenario and return the machine report as a dict."""
    return json.loads(run_scenario_json(text, mode, seed, max_events))
