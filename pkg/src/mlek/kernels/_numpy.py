"""Vectorized numpy implementations of the hot kernels."""
import numpy as np
from scipy.linalg import solveh_banded

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


def fmix64(z):
    """splitmix64 finalizer on uint64 values (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def keyed_normals(hashes, ndraw):
    hashes = np.asarray(hashes, dtype=np.uint64).reshape(-1, 1)
    c = 2 * np.arange(ndraw, dtype=np.uint64).reshape(1, -1)
    with np.errstate(over="ignore"):
        b1 = fmix64(hashes + (c + np.uint64(1)) * GOLDEN)
        b2 = fmix64(hashes + (c + np.uint64(2)) * GOLDEN)
    u1 = ((b1 >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
    u2 = (b2 >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def ou_euler(u, hashes, n_sub, agg, sigma):
    n_fine = n_sub * agg
    dt = 1.0 / n_sub
    dw = keyed_normals(hashes, n_fine) * np.sqrt(1.0 / n_fine)
    if agg > 1:
        dw = dw.reshape(len(u), n_sub, agg).sum(axis=2)
    u = np.array(u, dtype=np.float64, copy=True)
    for s in range(n_sub):
        u = u - u * dt + sigma * dw[:, s]
    return u


def banded_spd_solve(ab, rhs):
    out = np.empty_like(rhs)
    for j in range(rhs.shape[0]):
        try:
            out[j] = solveh_banded(ab[j], rhs[j], lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            out[j] = np.nan
    return out
