"""The four benchmark problems: OU filtering (DEnKF/EnKF) and Darcy inversion (EKI/EKS)."""
import math
from dataclasses import dataclass, field

import numpy as np

from mlek import rng
from mlek.engine import StepSchedule, shifted_normal_initial, standard_normal_initial
from mlek.methods import DENKF, EKI, EKS, ENKF, MethodSpec
from mlek.models import DarcyHierarchy, OUExact, OUHierarchy

OU_DEFAULTS = {
    "sigma": 0.5,
    "noise_var": 0.04,
    "n_steps": 10,
    "init_mean": 1.0,
    "init_std": 0.2,
    "obs_seed": 2024,
}

DARCY_DEFAULTS = {
    "grid_offset": 13,
    "noise_var": 0.01,
    "prior_var": 1.0,
    "obs_seed": 2024,
    "gold_level": 11,
    "gold_steps": 14,
    "delta": 0.1,
    "n_const": 10.0,
    "tau0": 1.0,
    "tau_max": 10.0,
}


@dataclass
class Problem:
    name: str
    method: MethodSpec
    hierarchy: object
    reference: object
    reference_level: int
    initial: object
    steps: StepSchedule
    gold_steps: int
    params: dict = field(default_factory=dict)

    @property
    def beta(self):
        return self.hierarchy.beta

    @property
    def gamma(self):
        return self.hierarchy.gamma


def ou_observations(sigma, noise_var, n_steps, seed, u0=1.0):
    """Truth trajectory from the exact OU map and observations ``y_n = u_n + eta_n``."""
    exact = OUExact(sigma)
    u = np.array([[u0]])
    ys = []
    for n in range(n_steps):
        h_model = rng.key_hashes(seed, rng.STREAM_OBS, 0, 0, n, [0])
        u = exact.evaluate(u, hashes=h_model)
        eta = rng.ensemble_normals(seed, rng.STREAM_OBS, 1, 0, n, 1, 1)[0]
        ys.append(u[0] + math.sqrt(noise_var) * eta)
    return np.array(ys)


def _check_params(params, defaults, name):
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {', '.join(sorted(unknown))}")
    return {**defaults, **params}


def _ou_problem(name, kind, params):
    p = _check_params(params, OU_DEFAULTS, name)
    y = ou_observations(p["sigma"], p["noise_var"], p["n_steps"], p["obs_seed"])
    method = MethodSpec(kind=kind, noise_cov=[[p["noise_var"]]], y=y, H=[[1.0]])
    return Problem(
        name=name,
        method=method,
        hierarchy=OUHierarchy(p["sigma"]),
        reference=OUExact(p["sigma"]),
        reference_level=0,
        initial=shifted_normal_initial([p["init_mean"]], p["init_std"]),
        steps=StepSchedule("fixed", n_steps=p["n_steps"]),
        gold_steps=p["n_steps"],
        params=p,
    )


def darcy_observations(hierarchy, level, noise_var, seed):
    """Synthetic data from a prior draw pushed through level ``level``."""
    truth = rng.ensemble_normals(seed, rng.STREAM_OBS, 0, 0, 0, 1, hierarchy.state_dim)
    clean = hierarchy.evaluate(truth, level)[0]
    eta = rng.ensemble_normals(seed, rng.STREAM_OBS, 1, 0, 0, 1, hierarchy.output_dim)[0]
    return truth[0], clean + math.sqrt(noise_var) * eta


def _darcy_problem(name, kind, params):
    p = _check_params(params, DARCY_DEFAULTS, name)
    hierarchy = DarcyHierarchy(grid_offset=p["grid_offset"])
    _, y = darcy_observations(hierarchy, p["gold_level"], p["noise_var"], p["obs_seed"])
    d_g = hierarchy.output_dim
    method = MethodSpec(
        kind=kind,
        noise_cov=p["noise_var"] * np.eye(d_g),
        y=y,
        prior_cov=p["prior_var"] * np.eye(hierarchy.state_dim) if kind == EKS else None,
        adaptive=True,
        tau0=p["tau0"],
        tau_max=p["tau_max"],
    )
    return Problem(
        name=name,
        method=method,
        hierarchy=hierarchy,
        reference=hierarchy,
        reference_level=p["gold_level"],
        initial=standard_normal_initial(hierarchy.state_dim),
        steps=StepSchedule("power", delta=p["delta"], n_const=p["n_const"]),
        gold_steps=p["gold_steps"],
        params=p,
    )


_BUILDERS = {
    "ou_denkf": lambda params: _ou_problem("ou_denkf", DENKF, params),
    "ou_enkf": lambda params: _ou_problem("ou_enkf", ENKF, params),
    "darcy_eki": lambda params: _darcy_problem("darcy_eki", EKI, params),
    "darcy_eks": lambda params: _darcy_problem("darcy_eks", EKS, params),
}

PROBLEMS = tuple(_BUILDERS)


def build_problem(name, **params):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    return builder(params)
