"""Scenario loading, deterministic execution, event logs, live serving."""
from .events import EventLog, canonical, initial_state, reduce_event, replay, state_digest
from .runner import ScenarioRunner, run_scenario
from .scenario import (
    PersonSetup,
    Scenario,
    ScriptedCommand,
    VehicleSetup,
    WorkflowSetup,
    load_scenario,
    materialized,
    parse_scenario,
)

__all__ = [
    "EventLog",
    "PersonSetup",
    "Scenario",
    "ScenarioRunner",
    "ScriptedCommand",
    "VehicleSetup",
    "WorkflowSetup",
    "canonical",
    "initial_state",
    "load_scenario",
    "materialized",
    "parse_scenario",
    "reduce_event",
    "replay",
    "run_scenario",
    "state_digest",
]
