from mlek.models.base import ModelHierarchy, model_cost
from mlek.models.darcy import DarcyHierarchy, darcy_solve_grid, kl_log_permeability, kl_modes
from mlek.models.ou import OUExact, OUHierarchy, coupled_brownian, ou_exact_step, ou_milstein_step

__all__ = [
    "ModelHierarchy", "model_cost", "DarcyHierarchy", "darcy_solve_grid", "kl_log_permeability",
    "kl_modes", "OUExact", "OUHierarchy", "coupled_brownian", "ou_exact_step", "ou_milstein_step",
]
