import numpy as np


class ModelHierarchy:
    """Forward maps ``G_l`` indexed by level with cost ``2**(gamma*l)`` in ``G_0`` units.

    ``evaluate(u, level, hashes, path_level)`` maps a particle stack ``(J, d_u)``
    to outputs ``(J, d_g)``. Stochastic models draw their noise from the
    per-particle key hashes of ``path_level`` (defaults to ``level``); a
    coarse partner passes its fine level so both see one Brownian path.
    """

    beta = None
    gamma = None
    state_dim = None
    output_dim = None
    stochastic = False

    def cost(self, level):
        return 2.0 ** (self.gamma * level)

    def evaluate(self, u, level, hashes=None, path_level=None):
        raise NotImplementedError

    def _require_hashes(self, hashes, n):
        if hashes is None:
            raise ValueError(f"{type(self).__name__} is stochastic and needs noise keys")
        hashes = np.asarray(hashes, dtype=np.uint64).reshape(-1)
        if hashes.shape[0] != n:
            raise ValueError(f"expected {n} noise keys, got {hashes.shape[0]}")
        return hashes


def model_cost(hierarchy, level):
    if level < 0:
        raise ValueError("level must be non-negative")
    return hierarchy.cost(level)
