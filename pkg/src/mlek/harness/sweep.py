"""RMSE-versus-cost sweeps and log-log rate fits."""
import math
from dataclasses import dataclass, field

import numpy as np

from mlek.engine import (
    ml_constant_for_top_level,
    run_multilevel,
    run_single_level,
    select_params_ml,
    select_params_sl,
    step_budget,
)
from mlek.harness.config import MULTILEVEL


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float


@dataclass
class ReportRow:
    epsilon: float
    level: int
    particles: list
    steps: int
    costs: list
    qois: list
    rmse: float

    @property
    def cost(self):
        return math.fsum(self.costs) / len(self.costs)


@dataclass
class ConvergenceReport:
    rows: list
    fit: RateFit = None
    window: int = 4
    metadata: dict = field(default_factory=dict)


def rmse(qois, gold):
    """``sqrt(mean_r |qoi_r - gold|^2)``."""
    diffs = np.atleast_2d(np.asarray(qois, dtype=np.float64)) - np.asarray(gold, dtype=np.float64)
    return float(np.sqrt(np.mean(np.sum(diffs**2, axis=1))))


def fit_rate(rows, K=4):
    """Least-squares slope of ``log2 rmse`` against ``log2 cost`` over the last ``K`` rows.

    ``rows`` holds report rows or ``(cost, rmse)`` pairs.
    """
    pts = [(r.cost, r.rmse) if isinstance(r, ReportRow) else tuple(r) for r in rows]
    if len(pts) < 2:
        raise ValueError("need at least two rows to fit a rate")
    pts = pts[-min(K, len(pts)):]
    cost, err = np.array(pts, dtype=np.float64).T
    if np.any(cost <= 0) or np.any(err <= 0):
        raise ValueError("cost and RMSE must be positive for a log-log fit")
    x, y = np.log2(cost), np.log2(err)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return RateFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))


def resolve_j_const(config, problem):
    if config.J_const is not None:
        return config.J_const
    if config.algorithm == MULTILEVEL:
        return ml_constant_for_top_level(config.epsilon_sweep[0], problem.beta, problem.gamma)
    return 1.0


def plan(config, problem, eps):
    """Level, per-level sizes and step count for one sweep row."""
    J_const = resolve_j_const(config, problem)
    steps = config.steps or problem.steps
    N = step_budget(eps, steps)
    if config.algorithm == MULTILEVEL:
        L, J = select_params_ml(eps, problem.beta, problem.gamma, J_const)
    else:
        L, J = select_params_sl(eps, problem.beta, problem.gamma, J_const)
        J = [J]
    return L, J, N


def run_row(config, problem, eps):
    L, J, N = plan(config, problem, eps)
    runs = []
    for r in range(config.replications):
        if config.algorithm == MULTILEVEL:
            res = run_multilevel(problem.method, problem.hierarchy, L, J, N, config.seed,
                                 replica=r, initial=problem.initial)
        else:
            res = run_single_level(problem.method, problem.hierarchy, L, J[0], N, config.seed,
                                   replica=r, initial=problem.initial)
        runs.append(res)
    return L, J, N, runs


def build_report(config, gold, rows_runs, metadata=None):
    """Assemble a report from finished runs: ``rows_runs`` is ``[(eps, L, J, N, runs)]``."""
    rows = []
    for eps, L, J, N, runs in rows_runs:
        qois = [np.asarray(r.qoi_estimate, dtype=np.float64) for r in runs]
        rows.append(ReportRow(
            epsilon=eps, level=L, particles=list(J), steps=N,
            costs=[r.total_cost for r in runs],
            qois=[q.tolist() for q in qois],
            rmse=rmse(qois, gold.at(N)),
        ))
    fit = fit_rate(rows, config.slope_window) if len(rows) >= 2 else None
    meta = {
        "config": config.to_dict(),
        "config_digest": config.digest(),
        "gold_digest": gold.digest,
        "seed": config.seed,
        "slope": None if fit is None else fit.slope,
        "intercept": None if fit is None else fit.intercept,
        "residual": None if fit is None else fit.residual,
        "rmse_formula": "sqrt(mean over replications of |qoi - gold|_2^2)",
    }
    meta.update(metadata or {})
    return ConvergenceReport(rows=rows, fit=fit, window=config.slope_window, metadata=meta)


def rmse_sweep(config, problem, gold, progress=None):
    """Run every epsilon row; returns the report and the raw rows for caching."""
    rows_runs = []
    for eps in config.epsilon_sweep:
        L, J, N, runs = run_row(config, problem, eps)
        rows_runs.append((eps, L, J, N, runs))
        if progress is not None:
            progress(eps, L, J, N, runs)
    return build_report(config, gold, rows_runs), rows_runs
