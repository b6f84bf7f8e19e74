"""Single-level and single-ensemble multilevel ensemble Kalman simulation."""
from mlek._accel import backend
from mlek.engine import (
    RunResult,
    run_multilevel,
    run_single_level,
    select_params_ml,
    select_params_sl,
    step_budget,
)
from mlek.methods import MethodSpec
from mlek.problems import build_problem

__version__ = "0.1.0"

__all__ = [
    "backend", "RunResult", "run_multilevel", "run_single_level", "select_params_ml",
    "select_params_sl", "step_budget", "MethodSpec", "build_problem",
]
