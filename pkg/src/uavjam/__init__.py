"""Joint placement and antenna orientation of jamming UAVs.

Minimizes the average SINR of ground targets served by a control center,
subject to a deployable half-plane, target standoff and anti-collision
distances.
"""

from .admm import AdmmConfig, SolverReport, solve
from .baselines import BcdConfig, baseline1, baseline2
from .gradproj import GradProjConfig
from .scenario import (
    Deployment,
    Scenario,
    load_scenario,
    parse_scenario,
    random_scenario,
    serialize_scenario,
    validate_scenario,
)
from .signalmodel import GainMode, avg_sinr, sinr_targets

__all__ = [
    "AdmmConfig",
    "BcdConfig",
    "Deployment",
    "GainMode",
    "GradProjConfig",
    "Scenario",
    "SolverReport",
    "avg_sinr",
    "baseline1",
    "baseline2",
    "load_scenario",
    "parse_scenario",
    "random_scenario",
    "serialize_scenario",
    "sinr_targets",
    "solve",
    "validate_scenario",
]

__version__ = "0.1.0"
