"""Numerical construction of vortex configurations whose energy measures
approximate a prescribed probability measure on the unit disk, with the
flow-box diagnostics of the corresponding three-dimensional solutions."""

from .errors import LabError
from .measure import DiracApproximation, DiskMeasure, dirac_approximate, estimate_frostman, w1_distance
from .pipeline import RunArtifacts, RunConfig, export, parse_config, run_pipeline, summarize
from .schedule import ScheduleParams, build_schedule, frostman_F, interpolated_F, select_r, theta_exponent
from .swbox import FlowBoxSolution, lift_to_flowbox, max_principle_scan
from .vortex import GridSpec, VortexField, ZeroConfig, solve_radial, solve_vortex, total_energy

__all__ = [
    "LabError", "DiracApproximation", "DiskMeasure", "dirac_approximate", "estimate_frostman",
    "w1_distance", "RunArtifacts", "RunConfig", "export", "parse_config", "run_pipeline",
    "summarize", "ScheduleParams", "build_schedule", "frostman_F", "interpolated_F", "select_r",
    "theta_exponent", "FlowBoxSolution", "lift_to_flowbox", "max_principle_scan", "GridSpec",
    "VortexField", "ZeroConfig", "solve_radial", "solve_vortex", "total_energy",
]
__version__ = "0.1.0"
