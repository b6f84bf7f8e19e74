"""2-D Darcy flow with a truncated Karhunen-Loeve log-permeability.

Solves ``-div(a grad p) = f`` on the unit square with ``p = 0`` on the
boundary, using the conservative 5-point scheme on an ``M x M`` cell grid
(face coefficients are nodal averages), then reads ``p`` off a 7x7
interior lattice by bilinear interpolation.
"""
import math
from functools import lru_cache

import numpy as np

from mlek import kernels
from mlek.methods import SolveError
from mlek.models.base import ModelHierarchy


def default_forcing(x1, x2):
    return 1000.0 * np.exp(x1 + x2)


@lru_cache(maxsize=None)
def kl_modes(n_modes=16, tau=3.0, d=2.0):
    """Wavevectors with the ``n_modes`` largest eigenvalues ``(pi^2 |k|^2 + tau^2)^-d``.

    Ties are broken lexicographically on ``(k1, k2)``.
    """
    kmax = int(math.isqrt(n_modes)) + 2
    cand = [(k1, k2) for k1 in range(kmax + 1) for k2 in range(kmax + 1) if (k1, k2) != (0, 0)]
    lam = {k: (math.pi**2 * (k[0] ** 2 + k[1] ** 2) + tau**2) ** (-d) for k in cand}
    cand.sort(key=lambda k: (-lam[k], k))
    ks = np.array(cand[:n_modes], dtype=np.int64)
    return ks, np.array([lam[tuple(k)] for k in ks])


def kl_basis(x1, x2, n_modes=16, tau=3.0, d=2.0):
    """``sqrt(lambda_k) phi_k(x)`` for each mode; shape ``(n_modes, *x.shape)``."""
    ks, lam = kl_modes(n_modes, tau, d)
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    out = np.empty((len(ks),) + np.broadcast(x1, x2).shape)
    for m, (k1, k2) in enumerate(ks):
        c = math.sqrt(2.0) if k1 * k2 == 0 else 2.0
        out[m] = math.sqrt(lam[m]) * c * np.cos(math.pi * k1 * x1) * np.cos(math.pi * k2 * x2)
    return out


def kl_log_permeability(u, x, tau=3.0, d=2.0):
    """Permeability ``a(x, u) = exp(sum_k u_k sqrt(lambda_k) phi_k(x))`` at one point."""
    u = np.asarray(u, dtype=np.float64)
    basis = kl_basis(x[0], x[1], len(u), tau, d)
    return float(np.exp(u @ basis))


def _assemble(a, M, f_interior):
    """Lower band storage of the 5-point operator and scaled right-hand sides."""
    m = M - 1
    n = m * m
    ax = 0.5 * (a[:, :-1, :] + a[:, 1:, :])  # faces (i+1/2, j)
    ay = 0.5 * (a[:, :, :-1] + a[:, :, 1:])  # faces (i, j+1/2)
    diag = ax[:, :-1, 1:-1] + ax[:, 1:, 1:-1] + ay[:, 1:-1, :-1] + ay[:, 1:-1, 1:]
    J = a.shape[0]
    p = max(m, 1)
    ab = np.zeros((J, p + 1, n))
    ab[:, 0] = diag.reshape(J, n)
    if m > 1:
        north = -ay[:, 1:-1, 1:-1].copy()  # coupling (i, j)-(i, j+1), interior j < m
        low = np.zeros((J, m, m))
        low[:, :, :-1] = north
        ab[:, 1] += low.reshape(J, n)
        east = np.zeros((J, m, m))
        east[:, :-1, :] = -ax[:, 1:-1, 1:-1]  # coupling (i, j)-(i+1, j)
        ab[:, m] += east.reshape(J, n)
    rhs = np.broadcast_to(f_interior.reshape(1, n) / M**2, (J, n))
    return ab, rhs


def darcy_solve_grid(log_a, M, forcing_values):
    """Nodal pressure ``(J, M+1, M+1)`` for nodal log-permeabilities ``(J, M+1, M+1)``."""
    log_a = np.asarray(log_a, dtype=np.float64)
    J = log_a.shape[0]
    ab, rhs = _assemble(np.exp(log_a), M, forcing_values[1:-1, 1:-1])
    sol = kernels.banded_spd_solve(ab, rhs)
    if not np.all(np.isfinite(sol)):
        bad = int(np.sum(~np.isfinite(sol).all(axis=1)))
        raise SolveError(f"Darcy solve failed for {bad} of {J} systems on a {M}x{M} grid")
    p = np.zeros((J, M + 1, M + 1))
    p[:, 1:-1, 1:-1] = sol.reshape(J, M - 1, M - 1)
    return p


def interpolation_matrix(M, points):
    """Bilinear weights mapping nodal values ``(M+1)**2`` (x1-major) to ``points``."""
    W = np.zeros((len(points), (M + 1) ** 2))
    for r, (x1, x2) in enumerate(points):
        s1, s2 = x1 * M, x2 * M
        i = min(int(math.floor(s1)), M - 1)
        j = min(int(math.floor(s2)), M - 1)
        t1, t2 = s1 - i, s2 - j
        for di, wi in ((0, 1 - t1), (1, t1)):
            for dj, wj in ((0, 1 - t2), (1, t2)):
                W[r, (i + di) * (M + 1) + (j + dj)] += wi * wj
    return W


def observation_points(n_side=7):
    ticks = np.arange(1, n_side + 1) / (n_side + 1)
    return [(a, b) for a in ticks for b in ticks]


class DarcyHierarchy(ModelHierarchy):
    """Finite-difference hierarchy with ``M_l = round(2**((offset + l)/4))`` cells per side."""

    beta = 1.0
    gamma = 0.5
    stochastic = False

    def __init__(self, grid_offset=13, n_modes=16, tau=3.0, d=2.0, forcing=default_forcing,
                 n_obs_side=7):
        self.grid_offset = grid_offset
        self.n_modes = n_modes
        self.tau = tau
        self.d = d
        self.forcing = forcing
        self.points = observation_points(n_obs_side)
        self.state_dim = n_modes
        self.output_dim = len(self.points)
        self._levels = {}

    def grid_size(self, level):
        return int(round(2.0 ** ((self.grid_offset + level) / 4.0)))

    def _level_data(self, level):
        M = self.grid_size(level)
        if M not in self._levels:
            x = np.arange(M + 1) / M
            x1, x2 = np.meshgrid(x, x, indexing="ij")
            basis = kl_basis(x1, x2, self.n_modes, self.tau, self.d).reshape(self.n_modes, -1)
            self._levels[M] = (basis, self.forcing(x1, x2), interpolation_matrix(M, self.points))
        return M, self._levels[M]

    def evaluate(self, u, level, hashes=None, path_level=None):
        u = np.atleast_2d(np.asarray(u, dtype=np.float64))
        M, (basis, f, W) = self._level_data(level)
        # einsum keeps each particle's arithmetic independent of the batch it sits in
        log_a = np.einsum("jk,kn->jn", u, basis).reshape(-1, M + 1, M + 1)
        try:
            p = darcy_solve_grid(log_a, M, f)
        except SolveError as exc:
            raise SolveError(f"level {level}: {exc}") from exc
        return np.einsum("jn,rn->jr", p.reshape(p.shape[0], -1), W)

    def darcy_solve(self, u, level):
        out = self.evaluate(np.atleast_2d(u), level)
        return out[0] if np.ndim(u) == 1 else out
