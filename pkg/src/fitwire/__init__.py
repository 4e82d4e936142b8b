"""Coupled 1D-3D electrothermal thin-wire solver on rectilinear FIT grids."""

from .config import ConfigError, ExperimentConfig, load_config
from .linsolve import SolverError
from .mesh import RectilinearGrid, build_gradient, dual_measures, graded_axis
from .model import ElectrothermalModel, RobinData
from .solver import TransientConfig, run_transient, solve_electric, solve_penalty
from .wire_coupling import WireCurve, build_coupling

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ElectrothermalModel", "ExperimentConfig", "RectilinearGrid",
    "RobinData", "SolverError", "TransientConfig", "WireCurve", "build_coupling",
    "build_gradient", "dual_measures", "graded_axis", "load_config", "run_transient",
    "solve_electric", "solve_penalty",
]
