"""Gold-standard QoI trajectories from large single-level runs, cached on disk."""
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mlek.engine import run_single_level

log = logging.getLogger(__name__)

GOLD_FORMAT = 1


def cache_dir():
    env = os.environ.get("MLEK_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "mlek"


@dataclass
class GoldStandard:
    history: np.ndarray
    replicate_histories: np.ndarray
    metadata: dict

    @property
    def steps(self):
        return self.history.shape[0] - 1

    def at(self, n):
        if n > self.steps:
            raise ValueError(f"gold standard covers {self.steps} steps, {n} requested")
        return self.history[n]

    @property
    def digest(self):
        return self.metadata["digest"]


def _gold_id(problem, seed, particles, replications, n_steps):
    spec = {
        "format": GOLD_FORMAT,
        "problem": problem.name,
        "params": problem.params,
        "seed": seed,
        "particles": particles,
        "replications": replications,
        "steps": n_steps,
        "reference_level": problem.reference_level,
    }
    return hashlib.sha256(json.dumps(spec, sort_keys=True, default=str).encode()).hexdigest()[:20]


def _load(path):
    with np.load(path, allow_pickle=False) as data:
        history = data["history"]
        reps = data["replicates"]
        meta = json.loads(str(data["metadata"]))
    return GoldStandard(history, reps, meta)


def compute_gold_standard(problem, seed, particles=10_000, replications=10, n_steps=None,
                          use_cache=True, directory=None):
    """Average of ``replications`` single-level QoI trajectories on the reference model.

    The trajectory covers steps ``0..n_steps`` so step-dependent budgets can
    compare against the matching step.
    """
    n_steps = problem.gold_steps if n_steps is None else n_steps
    gid = _gold_id(problem, seed, particles, replications, n_steps)
    path = Path(directory or cache_dir()) / f"gold-{problem.name}-{gid}.npz"
    if use_cache and path.exists():
        try:
            gold = _load(path)
            if gold.metadata.get("digest") == gid:
                return gold
            log.warning("gold cache %s has a mismatched id; recomputing", path)
        except Exception as exc:  # corrupt archive of any kind
            log.warning("gold cache %s unreadable (%s); recomputing", path, exc)

    histories, spreads = [], []
    for r in range(replications):
        result, ens = run_single_level(problem.method, problem.reference, problem.reference_level,
                                       particles, n_steps, seed, replica=r,
                                       initial=problem.initial, return_ensemble=True)
        histories.append(result.qoi_history)
        spreads.append(np.std(ens.particles, axis=0, ddof=1))
    histories = np.array(histories)
    history = histories.mean(axis=0)
    final = histories[:, -1, :]
    ensemble_std = np.mean(spreads, axis=0)
    meta = {
        "digest": gid,
        "problem": problem.name,
        "params": {k: v for k, v in problem.params.items()},
        "seed": seed,
        "particles": particles,
        "replications": replications,
        "steps": n_steps,
        "reference_level": problem.reference_level,
        "stderr_between_replications": (np.std(final, axis=0, ddof=1) / np.sqrt(replications)).tolist(),
        "ensemble_std": ensemble_std.tolist(),
        "ensemble_std_bound": (ensemble_std / np.sqrt(replications * particles)).tolist(),
    }
    gold = GoldStandard(history, histories, meta)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, history=history, replicates=histories, metadata=json.dumps(meta, default=str))
        os.replace(tmp, path)
    return gold
