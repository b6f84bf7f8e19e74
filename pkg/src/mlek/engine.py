"""Single-level and single-ensemble multilevel drivers.

Both drivers run the same loop over a list of subensembles. A single-level
run is one fine subensemble at level ``L``; a multilevel run has a fine
subensemble at level 0 and a (fine, coarse) pair at each level 1..L. Fine
and coarse partners share every noise key, so they differ only through the
forward model they use.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from mlek import rng
from mlek.kernels import keyed_normals
from mlek.methods import UpdateContext
from mlek.stats import ml_statistic, sample_mean

FINE = "fine"
COARSE = "coarse"


class SimulationError(RuntimeError):
    pass


@dataclass
class Ensemble:
    particles: np.ndarray
    pair_index: np.ndarray
    level: int
    role: str = FINE

    @property
    def size(self):
        return self.particles.shape[0]


@dataclass
class MultilevelEnsemble:
    """``fine[l]`` for every level, ``coarse[l]`` for ``l >= 1`` (``coarse[0]`` is None)."""

    fine: list
    coarse: list

    @property
    def levels(self):
        return len(self.fine)

    def subensembles(self):
        return list(zip(self.fine, self.coarse))


@dataclass
class RunResult:
    qoi_estimate: np.ndarray
    total_cost: float
    steps_taken: int
    particle_counts: tuple
    seed: int
    replica: int = 0
    qoi_history: np.ndarray = None
    evaluations: dict = field(default_factory=dict)
    taus: list = field(default_factory=list)

    def to_dict(self):
        return {
            "qoi_estimate": self.qoi_estimate.tolist(),
            "total_cost": self.total_cost,
            "steps_taken": self.steps_taken,
            "particle_counts": list(self.particle_counts),
            "seed": self.seed,
            "replica": self.replica,
            "evaluations": {str(k): v for k, v in sorted(self.evaluations.items())},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            qoi_estimate=np.asarray(d["qoi_estimate"], dtype=np.float64),
            total_cost=float(d["total_cost"]),
            steps_taken=int(d["steps_taken"]),
            particle_counts=tuple(d["particle_counts"]),
            seed=int(d["seed"]),
            replica=int(d.get("replica", 0)),
            evaluations={int(k): int(v) for k, v in d.get("evaluations", {}).items()},
        )


def standard_normal_initial(dim):
    """Initial law ``N(0, I)`` drawn from the keyed init stream."""

    def draw(seed, replica, level, n_pairs):
        return rng.ensemble_normals(seed, rng.STREAM_INIT, replica, level, 0, n_pairs, dim)

    return draw


def shifted_normal_initial(mean, std):
    """Initial law ``mean + std * N(0, I)``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))

    def draw(seed, replica, level, n_pairs):
        z = rng.ensemble_normals(seed, rng.STREAM_INIT, replica, level, 0, n_pairs, len(mean))
        return mean + std * z

    return draw


def initial_ensemble(initial, levels, counts, seed, replica, multilevel):
    fine, coarse = [], []
    for level, J in zip(levels, counts):
        u0 = np.atleast_2d(np.asarray(initial(seed, replica, level, J), dtype=np.float64))
        idx = np.arange(J)
        fine.append(Ensemble(u0.copy(), idx, level, FINE))
        has_coarse = multilevel and level > 0
        coarse.append(Ensemble(u0.copy(), idx, level, COARSE) if has_coarse else None)
    return MultilevelEnsemble(fine, coarse)


def _telescoped_qoi(qoi, mlens):
    total = None
    for fine, coarse in mlens.subensembles():
        term = np.asarray(qoi(fine.particles), dtype=np.float64)
        if coarse is not None:
            term = term - np.asarray(qoi(coarse.particles), dtype=np.float64)
        total = term if total is None else total + term
    return total


def _simulate(method, hierarchy, levels, counts, N, seed, replica, initial, qoi, trace,
              multilevel):
    if any(J < 2 for J in counts):
        raise ValueError(f"every subensemble needs at least 2 particles, got {list(counts)}")
    if initial is None:
        initial = standard_normal_initial(hierarchy.state_dim)
    mlens = initial_ensemble(initial, levels, counts, seed, replica, multilevel)
    state_dim = mlens.fine[0].particles.shape[1]
    noise_dim = method.noise_dim(state_dim)
    evaluations = {}
    history = [_telescoped_qoi(qoi, mlens)]
    taus = []
    elapsed = 0.0
    n = 0
    while n < N and (method.horizon is None or elapsed < method.horizon):
        try:
            outputs = []
            for fine, coarse in mlens.subensembles():
                lvl = fine.level
                hashes = None
                if hierarchy.stochastic:
                    hashes = rng.key_hashes(seed, rng.STREAM_MODEL, replica, lvl, n, fine.pair_index)
                g_f = hierarchy.evaluate(fine.particles, lvl, hashes, lvl)
                evaluations[lvl] = evaluations.get(lvl, 0) + fine.size
                g_c = None
                if coarse is not None:
                    g_c = hierarchy.evaluate(coarse.particles, lvl - 1, hashes, lvl)
                    evaluations[lvl - 1] = evaluations.get(lvl - 1, 0) + coarse.size
                outputs.append((g_f, g_c))
            theta = ml_statistic(
                method.layout,
                [(f.particles, gf, None if c is None else c.particles, gc)
                 for (f, c), (gf, gc) in zip(mlens.subensembles(), outputs)],
            )
            level_taus = []
            for (fine, coarse), (g_f, g_c) in zip(mlens.subensembles(), outputs):
                t = method.step_size(g_f, n)
                if g_c is not None:
                    t = min(t, method.step_size(g_c, n))
                level_taus.append(t)
            tau = min(level_taus)
            for (fine, coarse), (g_f, g_c) in zip(mlens.subensembles(), outputs):
                xi = np.zeros((fine.size, 0))
                if noise_dim:
                    h_xi = rng.key_hashes(seed, rng.STREAM_UPDATE, replica, fine.level, n,
                                          fine.pair_index)
                    xi = keyed_normals(h_xi, noise_dim)
                ctx = UpdateContext(step=n, tau=tau, xi=xi)
                fine.particles = np.atleast_2d(method.update(fine.particles, g_f, theta, ctx))
                if coarse is not None:
                    coarse.particles = np.atleast_2d(method.update(coarse.particles, g_c, theta, ctx))
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise SimulationError(f"step {n}: {exc}") from exc
        if trace is not None:
            trace.append({"step": n, "theta": theta.digest(), "tau": tau, "level_taus": level_taus})
        taus.append(tau)
        elapsed += tau
        n += 1
        history.append(_telescoped_qoi(qoi, mlens))
    total_cost = math.fsum(cnt * hierarchy.cost(lvl) for lvl, cnt in sorted(evaluations.items()))
    return RunResult(
        qoi_estimate=history[-1],
        total_cost=total_cost,
        steps_taken=n,
        particle_counts=tuple(int(J) for J in counts),
        seed=seed,
        replica=replica,
        qoi_history=np.array(history),
        evaluations=evaluations,
        taus=taus,
    ), mlens


def run_single_level(method, hierarchy, L, J, N, seed, *, replica=0, initial=None,
                     qoi=sample_mean, trace=None, return_ensemble=False):
    """Single-level ensemble of ``J`` particles on model level ``L`` for ``N`` steps."""
    result, mlens = _simulate(method, hierarchy, [L], [J], N, seed, replica, initial, qoi, trace,
                              multilevel=False)
    return (result, mlens.fine[0]) if return_ensemble else result


def run_multilevel(method, hierarchy, L, J_levels, N, seed, *, replica=0, initial=None,
                   qoi=sample_mean, trace=None, return_ensemble=False):
    """Single-ensemble multilevel run with ``J_levels[l]`` pairs at level ``l``."""
    if len(J_levels) != L + 1:
        raise ValueError(f"need {L + 1} level sizes, got {len(J_levels)}")
    result, mlens = _simulate(method, hierarchy, list(range(L + 1)), list(J_levels), N, seed,
                              replica, initial, qoi, trace, multilevel=True)
    return (result, mlens) if return_ensemble else result


def _levels_for(eps, beta):
    if not 0 < eps < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    return int(math.floor(2.0 * math.log2(1.0 / eps) / beta + 1e-9))


def _ceil(x):
    return int(math.ceil(round(x, 9)))


def ml_level_factor(L, beta, gamma):
    if math.isclose(beta, gamma):
        return L**2 * 2.0 ** (beta * L)
    if beta > gamma:
        return 2.0 ** (beta * L)
    return 2.0 ** ((beta + 2 * gamma) * L / 3)


def select_params_ml(eps, beta, gamma, J_const=1.0):
    """Level count and per-level pair counts for target accuracy ``eps``."""
    L = _levels_for(eps, beta)
    factor = ml_level_factor(L, beta, gamma)
    J = [max(2, _ceil(J_const * 2.0 ** (-(beta + 2 * gamma) * l / 3) * factor)) for l in range(L + 1)]
    return L, J


def ml_constant_for_top_level(eps, beta, gamma, top_size=8):
    """``J_const`` that makes the finest level hold ``top_size`` pairs at ``eps``."""
    L = _levels_for(eps, beta)
    return top_size / (2.0 ** (-(beta + 2 * gamma) * L / 3) * ml_level_factor(L, beta, gamma))


def select_params_sl(eps, beta, gamma, J_const=1.0):
    L = _levels_for(eps, beta)
    return L, max(2, _ceil(J_const * eps**-2))


@dataclass(frozen=True)
class StepSchedule:
    """``fixed``: always ``n_steps``; ``power``: ``ceil(n_const * eps**-delta)``."""

    kind: str = "fixed"
    n_steps: int = 10
    delta: float = 0.1
    n_const: float = 10.0

    def __post_init__(self):
        if self.kind not in ("fixed", "power"):
            raise ValueError(f"unknown step schedule {self.kind!r}")


def step_budget(eps, schedule):
    if schedule.kind == "fixed":
        return int(schedule.n_steps)
    if schedule.kind == "power":
        return max(1, _ceil(schedule.n_const * eps ** (-schedule.delta)))
    raise ValueError(f"unknown step schedule {schedule.kind!r}")
