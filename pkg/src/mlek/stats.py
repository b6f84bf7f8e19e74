"""Ensemble statistics, the telescoped multilevel statistic and PSD utilities."""
import hashlib
from dataclasses import dataclass

import numpy as np

MEAN_G = "mean_g"
COV_GG = "cov_gg"
COV_UG = "cov_ug"
COV_UU = "cov_uu"

SYMMETRY_RTOL = 1e-12


class EnsembleError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


@dataclass(frozen=True)
class StatBundle:
    """Named interaction statistics; closed under ``+`` and ``-`` for equal layouts."""

    layout: tuple
    entries: tuple

    def __post_init__(self):
        if len(self.layout) != len(self.entries):
            raise ValueError("layout and entries differ in length")
        for name, entry in zip(self.layout, self.entries):
            if name in (COV_GG, COV_UU) and (entry.ndim != 2 or entry.shape[0] != entry.shape[1]):
                raise ValueError(f"{name} must be a square matrix, got shape {entry.shape}")

    def _combine(self, other, op):
        if not isinstance(other, StatBundle):
            return NotImplemented
        if other.layout != self.layout:
            raise ValueError(f"layout mismatch: {self.layout} vs {other.layout}")
        return StatBundle(self.layout, tuple(op(a, b) for a, b in zip(self.entries, other.entries)))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __getitem__(self, name):
        return self.entries[self.layout.index(name)]

    def digest(self):
        h = hashlib.sha256()
        for name, entry in zip(self.layout, self.entries):
            h.update(name.encode())
            h.update(np.ascontiguousarray(entry, dtype=np.float64).tobytes())
        return h.hexdigest()


def _as_particles(ens):
    ens = np.asarray(ens, dtype=np.float64)
    if ens.ndim == 1:
        ens = ens[:, None]
    return ens


def sample_mean(ens):
    ens = _as_particles(ens)
    if ens.shape[0] == 0:
        raise EnsembleError("empty ensemble")
    return ens.mean(axis=0)


def sample_cov(ens_a, ens_b=None):
    """Sample (cross-)covariance with divisor ``J - 1``; rows are particles."""
    a = _as_particles(ens_a)
    b = a if ens_b is None else _as_particles(ens_b)
    if a.shape[0] != b.shape[0]:
        raise EnsembleError(f"particle counts differ: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        raise EnsembleError("degenerate covariance")
    da = a - a.mean(axis=0)
    db = da if ens_b is None else b - b.mean(axis=0)
    cov = da.T @ db / (n - 1)
    if ens_b is None:
        cov = 0.5 * (cov + cov.T)
    return cov


def sample_statistic(layout, u, g):
    """Single-ensemble statistic for ``layout`` from states ``u`` and outputs ``g``."""
    parts = []
    for name in layout:
        if name == MEAN_G:
            parts.append(sample_mean(g))
        elif name == COV_GG:
            parts.append(sample_cov(g))
        elif name == COV_UG:
            parts.append(sample_cov(u, g))
        elif name == COV_UU:
            parts.append(sample_cov(u))
        else:
            raise ValueError(f"unknown statistic {name!r}")
    return StatBundle(tuple(layout), tuple(parts))


def ml_statistic(layout, subensembles):
    """Telescoped multilevel statistic.

    ``subensembles[l]`` is ``(u_fine, g_fine, u_coarse, g_coarse)``; the coarse
    pair is ``None`` at level 0. Result: level-0 statistic plus the sum over
    higher levels of (fine statistic - coarse statistic).
    """
    total = None
    for level, (u_f, g_f, u_c, g_c) in enumerate(subensembles):
        term = sample_statistic(layout, u_f, g_f)
        if level > 0:
            term = term - sample_statistic(layout, u_c, g_c)
        total = term if total is None else total + term
    if total is None:
        raise EnsembleError("empty ensemble")
    return total


def check_symmetric(m, rtol=SYMMETRY_RTOL):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix is not square: {m.shape}")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T), initial=0.0) > rtol * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def positive_part(m):
    """Zero out the negative eigenvalues of a symmetric matrix."""
    m = check_symmetric(m)
    if m.shape == (1, 1):
        return np.maximum(m, 0.0)
    lam, q = np.linalg.eigh(m)
    keep = lam >= 0
    if keep.all():
        return m
    out = (q[:, keep] * lam[keep]) @ q[:, keep].T
    return 0.5 * (out + out.T)


def psd_sqrt(m, tol=1e-10):
    """Symmetric square root of a PSD matrix; round-off negatives are clipped."""
    m = check_symmetric(m)
    if m.shape == (1, 1):
        if m[0, 0] < 0 and -m[0, 0] > tol * abs(m[0, 0]):
            raise NotPSDError("not PSD")
        return np.sqrt(np.maximum(m, 0.0))
    lam, q = np.linalg.eigh(m)
    top = max(np.max(np.abs(lam)), np.finfo(float).tiny)
    if lam[0] < -tol * top:
        raise NotPSDError(f"not PSD: smallest eigenvalue {lam[0]:.3e}")
    root = (q * np.sqrt(np.clip(lam, 0.0, None))) @ q.T
    return 0.5 * (root + root.T)
