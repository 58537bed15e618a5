"""Outage analysis and simulation of a two-relay energy-harvesting
opportunistic-routing network with MRC at the destination."""

from .analysis import AnalysisReport, analyze
from .montecarlo import SimConfig, SimStats, run_simulation
from .scenario import Scenario, load_scenario, load_scenario_file

__all__ = [
    "AnalysisReport",
    "Scenario",
    "SimConfig",
    "SimStats",
    "analyze",
    "load_scenario",
    "load_scenario_file",
    "run_simulation",
]
__version__ = "0.1.0"
