"""Hybrid ground/drone cell-outage healing engine.

Given a failed base station's stranded users, surviving neighbor stations and
standby drone stations, the engine jointly decides who serves whom on which
sub-channel and where each active drone hovers, minimizing the total healing
energy while every user keeps its minimum rate.
"""

from .association import DecisionVars
from .orchestrator import SolutionReport, SolveOptions, audit, run
from .oracle import OracleResult, brute_force
from .scenario import (
    Scenario,
    ScenarioError,
    generate_random_scenario,
    generate_tiny_scenario,
    load_scenario,
    save_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "DecisionVars",
    "OracleResult",
    "Scenario",
    "ScenarioError",
    "SolutionReport",
    "SolveOptions",
    "audit",
    "brute_force",
    "generate_random_scenario",
    "generate_tiny_scenario",
    "load_scenario",
    "run",
    "save_scenario",
    "__version__",
]
