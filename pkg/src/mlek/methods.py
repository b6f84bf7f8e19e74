"""Per-particle update maps for EnKF, DEnKF, EKI and EKS.

All updates accept a single particle ``(d,)`` or a stack ``(J, d)``; the
statistic ``theta`` is shared by every row.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from mlek.stats import COV_GG, COV_UG, COV_UU, MEAN_G, positive_part, psd_sqrt

ENKF = "enkf"
DENKF = "denkf"
EKI = "eki"
EKS = "eks"

LAYOUTS = {
    ENKF: (COV_GG,),
    DENKF: (MEAN_G, COV_GG),
    EKI: (COV_UG, COV_GG),
    EKS: (COV_UU, COV_UG),
}

TAU_REG = 1e-10
COND_LIMIT = 1e14


class SolveError(np.linalg.LinAlgError):
    pass


def _solve(a, b, what):
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SolveError(f"{what}: matrix is ill-conditioned (condition estimate {cond:.3e})")
    return np.linalg.solve(a, b)


def _sym_inverse(m):
    inv = np.linalg.inv(m)
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True)
class UpdateContext:
    step: int
    tau: float = 1.0
    xi: np.ndarray = None


@dataclass
class MethodSpec:
    """Configuration of one ensemble Kalman method.

    ``y`` is a single observation vector for inversion, or an ``(N, d_y)``
    sequence for filtering where row ``n`` is assimilated at step ``n``.
    ``tau`` fixes the step size; ``adaptive=True`` uses :func:`adaptive_tau`.
    """

    kind: str
    noise_cov: np.ndarray
    y: np.ndarray
    H: np.ndarray = None
    prior_cov: np.ndarray = None
    tau: float = 1.0
    adaptive: bool = False
    tau0: float = 1.0
    tau_max: float = 10.0
    horizon: float = None

    def __post_init__(self):
        if self.kind not in LAYOUTS:
            raise ValueError(f"unknown method {self.kind!r}")
        self.noise_cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=np.float64))
        if np.linalg.eigvalsh(self.noise_cov)[0] <= 0:
            raise ValueError("noise covariance must be positive definite")
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.H is not None:
            self.H = np.atleast_2d(np.asarray(self.H, dtype=np.float64))
        if self.kind in (ENKF, DENKF) and self.H is None:
            raise ValueError(f"{self.kind} needs an observation map H")
        if self.kind == EKS:
            if self.prior_cov is None:
                raise ValueError("eks needs a prior covariance")
            self.prior_cov = np.atleast_2d(np.asarray(self.prior_cov, dtype=np.float64))
        if self.tau <= 0 or self.tau0 <= 0:
            raise ValueError("step sizes must be positive")

    @property
    def layout(self):
        return LAYOUTS[self.kind]

    @property
    def obs_dim(self):
        return self.noise_cov.shape[0]

    @property
    def filtering(self):
        return self.kind in (ENKF, DENKF)

    def noise_dim(self, state_dim):
        if self.kind == DENKF:
            return 0
        if self.kind == EKS:
            return state_dim
        return self.obs_dim

    def observation(self, step):
        if self.filtering:
            return np.atleast_1d(self.y[step])
        return np.atleast_1d(self.y)

    @cached_property
    def noise_inv(self):
        return _sym_inverse(self.noise_cov)

    @cached_property
    def noise_sqrt(self):
        return psd_sqrt(self.noise_cov)

    @cached_property
    def prior_inv(self):
        return _sym_inverse(self.prior_cov)

    def update(self, u, g_u, theta, ctx):
        return _UPDATES[self.kind](u, g_u, theta, ctx, self)

    def step_size(self, outputs, step):
        if not self.adaptive:
            return self.tau
        return adaptive_tau(outputs, self.observation(step), self.noise_cov, self.tau0,
                            tau_max=self.tau_max, noise_inv=self.noise_inv)


def _check_layout(theta, spec):
    if theta.layout != spec.layout:
        raise ValueError(f"{spec.kind} expects statistics {spec.layout}, got {theta.layout}")


def kalman_gain(cov_gg, H, noise_cov):
    """``theta H^T (H I+(theta) H^T + Gamma)^-1`` with ``theta`` left unclipped outside."""
    theta = np.atleast_2d(cov_gg)
    H = np.atleast_2d(H)
    s = H @ positive_part(theta) @ H.T + np.atleast_2d(noise_cov)
    # K^T = S^-1 H theta^T, S symmetric
    return _solve(s, H @ theta.T, "Kalman gain").T


def _prefix(xi, dim):
    return np.asarray(xi)[..., :dim]


def enkf_update(u, g_u, theta, ctx, spec):
    _check_layout(theta, spec)
    K = kalman_gain(theta[COV_GG], spec.H, spec.noise_cov)
    y = spec.observation(ctx.step)
    pert = y + _prefix(ctx.xi, spec.obs_dim) @ spec.noise_sqrt.T
    return g_u + (pert - g_u @ spec.H.T) @ K.T


def denkf_update(u, g_u, theta, ctx, spec):
    _check_layout(theta, spec)
    K = kalman_gain(theta[COV_GG], spec.H, spec.noise_cov)
    y = spec.observation(ctx.step)
    innov = y - 0.5 * (g_u + theta[MEAN_G]) @ spec.H.T
    return g_u + innov @ K.T


def eki_update(u, g_u, theta, ctx, spec):
    _check_layout(theta, spec)
    tau = ctx.tau
    s = tau * positive_part(theta[COV_GG]) + spec.noise_cov
    # B = C(u, g) S^-1, formed through its transpose
    B = _solve(s, theta[COV_UG].T, "EKI step").T
    y = spec.observation(ctx.step)
    resid = y - g_u + _prefix(ctx.xi, spec.obs_dim) @ spec.noise_sqrt.T / np.sqrt(tau)
    return u + tau * resid @ B.T


def eks_update(u, g_u, theta, ctx, spec):
    _check_layout(theta, spec)
    tau = ctx.tau
    cov_uu = theta[COV_UU]
    d = cov_uu.shape[0]
    a = np.eye(d) + tau * cov_uu @ spec.prior_inv
    y = spec.observation(ctx.step)
    bracket = u + tau * (y - g_u) @ (theta[COV_UG] @ spec.noise_inv).T
    drift = _solve(a, np.atleast_2d(bracket).T, "EKS step").T.reshape(np.shape(bracket))
    root = psd_sqrt(2.0 * tau * positive_part(cov_uu))
    return drift + _prefix(ctx.xi, d) @ root.T


_UPDATES = {ENKF: enkf_update, DENKF: denkf_update, EKI: eki_update, EKS: eks_update}


def adaptive_tau(outputs, y, noise_cov, tau0=1.0, tau_max=10.0, noise_inv=None):
    """Step ``tau0 / (||D||_F + 1e-10)``, capped at ``tau_max``.

    ``D[j, k] = <g_k - mean(g), Gamma^-1 (g_j - y)> / J``.
    """
    g = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if g.shape[0] == 0:
        raise ValueError("empty ensemble")
    if noise_inv is None:
        noise_inv = _sym_inverse(np.atleast_2d(noise_cov))
    centered = g - g.mean(axis=0)
    misfit = g - np.atleast_1d(y)
    D = misfit @ noise_inv @ centered.T / g.shape[0]
    return min(tau0 / (np.linalg.norm(D, "fro") + TAU_REG), tau_max)
