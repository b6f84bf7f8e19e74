"""numba implementations of the hot kernels.

Each kernel loops over particles with ``prange``; every particle reads only
its own key, so results do not depend on the thread count.
"""
import numpy as np
from numba import config, njit, prange

# TBB in this image is too old to load; workqueue is always present.
if config.THREADING_LAYER == "default":
    config.THREADING_LAYER = "workqueue"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_INV53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * np.pi


@njit(cache=True)
def _fmix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def _normal(h, i):
    c = np.uint64(i) * _TWO
    b1 = _fmix64(h + (c + _ONE) * GOLDEN)
    b2 = _fmix64(h + (c + _TWO) * GOLDEN)
    u1 = (np.float64(b1 >> _S11) + 1.0) * _INV53
    u2 = np.float64(b2 >> _S11) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


@njit(cache=True, parallel=True)
def keyed_normals(hashes, ndraw):
    out = np.empty((hashes.shape[0], ndraw))
    for j in prange(hashes.shape[0]):
        for i in range(ndraw):
            out[j, i] = _normal(hashes[j], i)
    return out


@njit(cache=True, parallel=True)
def ou_euler(u, hashes, n_sub, agg, sigma):
    n_fine = n_sub * agg
    dt = 1.0 / n_sub
    scale = np.sqrt(1.0 / n_fine)
    out = np.empty_like(u)
    for j in prange(u.shape[0]):
        x = u[j]
        h = hashes[j]
        for s in range(n_sub):
            dw = 0.0
            for a in range(agg):
                dw += _normal(h, s * agg + a) * scale
            x = x - x * dt + sigma * dw
        out[j] = x
    return out


# Systems per factorization block. The block index is the innermost axis of
# the factor, so each arithmetic step runs across 64 systems in SIMD lanes.
_BLOCK = 64


@njit(cache=True, parallel=True, fastmath=True)
def banded_spd_solve(ab, rhs):
    nsys, n = rhs.shape
    p = ab.shape[1] - 1
    B = _BLOCK
    out = np.empty_like(rhs)
    for b in prange((nsys + B - 1) // B):
        s0 = b * B
        nb = min(B, nsys - s0)
        # R[i, c, s] = L_s[i, i - p + c]; unused lanes factor the identity
        R = np.zeros((n, p + 1, B))
        t = np.zeros(B)
        bad = np.zeros(B, dtype=np.bool_)
        for i in range(n):
            lo = max(0, i - p)
            oi = p - i
            for j in range(lo, i + 1):
                oj = p - j
                for s in range(nb):
                    t[s] = ab[s0 + s, i - j, j]
                for s in range(nb, B):
                    t[s] = 1.0 if i == j else 0.0
                for k in range(max(lo, j - p), j):
                    for s in range(B):
                        t[s] -= R[i, k + oi, s] * R[j, k + oj, s]
                if j < i:
                    for s in range(B):
                        R[i, j + oi, s] = t[s] / R[j, p, s]
                else:
                    for s in range(B):
                        if not t[s] > 0.0:
                            bad[s] = True
                            t[s] = 1.0
                        R[i, p, s] = np.sqrt(t[s])
        y = np.zeros((n, B))
        for i in range(n):
            for s in range(nb):
                y[i, s] = rhs[s0 + s, i]
            for k in range(max(0, i - p), i):
                for s in range(B):
                    y[i, s] -= R[i, k - i + p, s] * y[k, s]
            for s in range(B):
                y[i, s] /= R[i, p, s]
        for i in range(n - 1, -1, -1):
            for k in range(i + 1, min(n, i + p + 1)):
                for s in range(B):
                    y[i, s] -= R[k, i - k + p, s] * y[k, s]
            for s in range(B):
                y[i, s] /= R[i, p, s]
        for s in range(nb):
            for i in range(n):
                out[s0 + s, i] = np.nan if bad[s] else y[i, s]
    return out
