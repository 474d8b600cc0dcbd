"""Size-structured fishery model with nonlocal crowding and threshold harvesting."""

from structured_harvest.model import ModelParams, DefaultForms, ConstantForms, validate_params
from structured_harvest.grid import SizeGrid, build_grid, cfl_timestep
from structured_harvest.transport import (
    PopulationState,
    ThresholdPolicy,
    TrajectoryRecord,
    simulate,
    threshold_policy,
)
from structured_harvest.steady import solve_steady_crowding, stationary_profile
from structured_harvest.replacement import critical_crowding, replacement_index
from structured_harvest.policy import evaluate_threshold, sweep_thresholds

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "DefaultForms",
    "ConstantForms",
    "validate_params",
    "SizeGrid",
    "build_grid",
    "cfl_timestep",
    "PopulationState",
    "ThresholdPolicy",
    "TrajectoryRecord",
    "simulate",
    "threshold_policy",
    "solve_steady_crowding",
    "stationary_profile",
    "critical_crowding",
    "replacement_index",
    "evaluate_threshold",
    "sweep_thresholds",
]
