"""Packet-level simulator for mesh-based on-demand multicast routing in MANETs."""

from .engine import Engine, Event, SchedulingError, SimTime
from .harness import CSV_COLUMNS, line5_scenario, run_scenario, run_simulation, sweep
from .metrics import MetricsLedger, avg_delay, pdr, rreq_load
from .scenario import FlowSpec, Scenario, ScenarioError, load_scenario
from .simulation import Simulation

__all__ = [
    "Engine", "Event", "SchedulingError", "SimTime",
    "CSV_COLUMNS", "line5_scenario", "run_scenario", "run_simulation", "sweep",
    "MetricsLedger", "avg_delay", "pdr", "rreq_load",
    "FlowSpec", "Scenario", "ScenarioError", "load_scenario",
    "Simulation",
]
