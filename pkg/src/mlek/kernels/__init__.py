"""Dispatch between the numba kernels and their numpy fallbacks.

Both backends are importable directly (``numpy_backend``/``numba_backend``)
so they can be cross-checked and benchmarked against each other.
"""
import numpy as np

from mlek import _accel
from mlek.kernels import _numpy as numpy_backend

try:
    from mlek.kernels import _numba as numba_backend
except ImportError:  # pragma: no cover
    numba_backend = None

fmix64 = numpy_backend.fmix64


def _impl():
    if _accel.USE_NUMBA and numba_backend is not None:
        return numba_backend
    return numpy_backend


def keyed_normals(hashes, ndraw):
    """Standard normal draws ``(len(hashes), ndraw)``; row ``j`` depends only on ``hashes[j]``."""
    hashes = np.ascontiguousarray(hashes, dtype=np.uint64).reshape(-1)
    return _impl().keyed_normals(hashes, int(ndraw))


def ou_euler(u, hashes, n_sub, agg, sigma):
    """Euler steps of ``du = -u dt + sigma dW`` over unit time.

    The Brownian path has ``n_sub * agg`` increments; ``agg`` consecutive
    increments are summed per step, so ``agg=2`` gives the coarse partner
    of an ``agg=1`` path on the same keys.
    """
    u = np.ascontiguousarray(u, dtype=np.float64).reshape(-1)
    hashes = np.ascontiguousarray(hashes, dtype=np.uint64).reshape(-1)
    return _impl().ou_euler(u, hashes, int(n_sub), int(agg), float(sigma))


def banded_spd_solve(ab, rhs):
    """Solve a batch of SPD banded systems in lower band storage.

    ``ab[m, d, i] = A_m[i + d, i]``. Rows whose factorization fails come back NaN.
    """
    ab = np.ascontiguousarray(ab, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    return _impl().banded_spd_solve(ab, rhs)
