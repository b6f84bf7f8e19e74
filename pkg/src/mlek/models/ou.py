"""Ornstein-Uhlenbeck forward models ``du = -u dt + sigma dW`` over unit time."""
import math

import numpy as np

from mlek import kernels
from mlek.models.base import ModelHierarchy
from mlek.rng import NoiseKey


def _hash(key):
    return np.array([key.hash()], dtype=np.uint64)


class OUHierarchy(ModelHierarchy):
    """Euler/Milstein discretizations with ``2**level`` steps.

    The diffusion is constant, so the Milstein correction is identically
    zero and the scheme is Euler-Maruyama.
    """

    beta = 2.0
    gamma = 1.0
    state_dim = 1
    output_dim = 1
    stochastic = True

    def __init__(self, sigma=0.5):
        self.sigma = float(sigma)

    def evaluate(self, u, level, hashes=None, path_level=None):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        hashes = self._require_hashes(hashes, u.shape[0])
        path_level = level if path_level is None else path_level
        if path_level < level:
            raise ValueError("path level must not be coarser than the model level")
        out = kernels.ou_euler(u, hashes, 2**level, 2 ** (path_level - level), self.sigma)
        return out[:, None]


class OUExact(ModelHierarchy):
    """Exact transition over unit time; ``level`` is ignored and costs one unit."""

    beta = math.inf
    gamma = 0.0
    state_dim = 1
    output_dim = 1
    stochastic = True

    def __init__(self, sigma=0.5):
        self.sigma = float(sigma)

    @property
    def noise_std(self):
        return math.sqrt(self.sigma**2 * (1.0 - math.exp(-2.0)) / 2.0)

    def cost(self, level):
        return 1.0

    def evaluate(self, u, level=0, hashes=None, path_level=None):
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        hashes = self._require_hashes(hashes, u.shape[0])
        z = kernels.keyed_normals(hashes, 1)[:, 0]
        return (math.exp(-1.0) * u + self.noise_std * z)[:, None]


def ou_exact_step(u, key, sigma=0.5):
    return OUExact(sigma).evaluate([u], hashes=_hash(key))[0, 0]


def ou_milstein_step(u, level, key, sigma=0.5):
    return OUHierarchy(sigma).evaluate([u], level, hashes=_hash(key))[0, 0]


def coupled_brownian(key: NoiseKey, fine_level):
    """Fine increments on ``2**fine_level`` steps and their pairwise-summed coarse partners."""
    if fine_level < 1:
        raise ValueError("fine level must be at least 1")
    n = 2**fine_level
    fine = key.normals(n) * math.sqrt(1.0 / n)
    coarse = fine.reshape(-1, 2).sum(axis=1)
    return fine, coarse
