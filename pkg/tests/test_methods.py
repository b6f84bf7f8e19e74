import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import LinearHierarchy, jacobi_eigh
from mlek.engine import run_single_level, shifted_normal_initial
from mlek.methods import (
    DENKF,
    EKI,
    EKS,
    ENKF,
    MethodSpec,
    SolveError,
    UpdateContext,
    adaptive_tau,
    kalman_gain,
)
from mlek.stats import COV_GG, COV_UG, COV_UU, MEAN_G, StatBundle


def bundle(kind, **entries):
    layout = {ENKF: (COV_GG,), DENKF: (MEAN_G, COV_GG), EKI: (COV_UG, COV_GG),
              EKS: (COV_UU, COV_UG)}[kind]
    return StatBundle(layout, tuple(np.atleast_1d(np.asarray(entries[n], float)) if n == MEAN_G
                                    else np.atleast_2d(np.asarray(entries[n], float))
                                    for n in layout))


def spd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + 0.5 * np.eye(n)


def test_kalman_gain_examples(rng):
    G = spd(rng, 3)
    np.testing.assert_array_equal(kalman_gain(np.zeros((3, 3)), np.eye(3), G), np.zeros((3, 3)))
    np.testing.assert_allclose(kalman_gain(G, np.eye(3), G), 0.5 * np.eye(3), atol=1e-12)


def test_kalman_gain_dense_oracle(rng):
    for _ in range(10):
        theta, gamma = spd(rng, 4) - 0.5 * np.eye(4), spd(rng, 2)
        H = rng.standard_normal((2, 4))
        ref = theta @ H.T @ np.linalg.inv(H @ theta @ H.T + gamma)
        np.testing.assert_allclose(kalman_gain(theta, H, gamma), ref, rtol=0, atol=1e-10)


def test_kalman_gain_clips_inside_only(rng):
    a = rng.standard_normal((3, 3))
    theta = (a + a.T) / 2
    lam, v = jacobi_eigh(theta)
    clipped = (v * np.maximum(lam, 0)) @ v.T
    H, gamma = np.eye(3), 0.3 * np.eye(3)
    ref = theta @ np.linalg.inv(clipped + gamma)
    np.testing.assert_allclose(kalman_gain(theta, H, gamma), ref, atol=1e-10)


def test_kalman_gain_reports_conditioning():
    with pytest.raises(SolveError, match="condition"):
        kalman_gain(np.zeros((2, 2)), np.eye(2), np.diag([1.0, 1e-300]))


def test_enkf_examples():
    spec = MethodSpec(ENKF, noise_cov=[[0.5]], y=[[2.0]], H=[[1.0]])
    g = np.array([[1.0], [3.0]])
    ctx = UpdateContext(step=0, xi=np.zeros((2, 1)))
    np.testing.assert_array_equal(spec.update(g, g, bundle(ENKF, cov_gg=0.0), ctx), g)
    out = spec.update(g, g, bundle(ENKF, cov_gg=0.5), ctx)
    np.testing.assert_allclose(out, 0.5 * g + 0.5 * 2.0, atol=1e-15)


def test_enkf_perturbation_scaling():
    spec = MethodSpec(ENKF, noise_cov=[[4.0]], y=[[0.0]], H=[[1.0]])
    ctx = UpdateContext(step=0, xi=np.array([[1.0]]))
    out = spec.update(np.zeros((1, 1)), np.zeros((1, 1)), bundle(ENKF, cov_gg=4.0), ctx)
    # K = 1/2, perturbed observation 0 + 2 * 1
    assert out[0, 0] == pytest.approx(1.0)


def test_denkf_examples():
    spec = MethodSpec(DENKF, noise_cov=[[0.2]], y=[[1.0]], H=[[1.0]])
    g = np.array([[0.4], [0.4]])
    ctx = UpdateContext(step=0)
    np.testing.assert_array_equal(spec.update(g, g, bundle(DENKF, mean_g=[0.4], cov_gg=0.0), ctx), g)
    out = spec.update(g, g, bundle(DENKF, mean_g=[0.4], cov_gg=0.2), ctx)
    np.testing.assert_allclose(out, 0.5 * g + 0.5, atol=1e-15)


def test_denkf_textbook_form(rng):
    H, gamma = rng.standard_normal((2, 3)), spd(rng, 2)
    spec = MethodSpec(DENKF, noise_cov=gamma, y=rng.standard_normal((1, 2)), H=H)
    g, m, c = rng.standard_normal(3), rng.standard_normal(3), spd(rng, 3)
    K = c @ H.T @ np.linalg.inv(H @ c @ H.T + gamma)
    y = spec.y[0]
    ref = (np.eye(3) - K @ H) @ g + K @ (y + H @ (g - m) / 2)
    out = spec.update(g, g, bundle(DENKF, mean_g=m, cov_gg=c), UpdateContext(step=0))
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_eki_examples():
    spec = MethodSpec(EKI, noise_cov=[[0.3]], y=[1.5])
    u, g = np.array([[0.2]]), np.array([[0.7]])
    ctx = UpdateContext(step=0, tau=0.4, xi=np.zeros((1, 1)))
    out = spec.update(u, g, bundle(EKI, cov_ug=0.0, cov_gg=2.0), ctx)
    np.testing.assert_array_equal(out, u)
    c = 2.0
    out = spec.update(u, g, bundle(EKI, cov_ug=c, cov_gg=c), ctx)
    assert out[0, 0] == pytest.approx(0.2 + 0.4 * c / (0.4 * c + 0.3) * (1.5 - 0.7), abs=1e-14)


def test_eki_noise_scaling():
    spec = MethodSpec(EKI, noise_cov=[[0.25]], y=[0.0])
    ctx = UpdateContext(step=0, tau=0.25, xi=np.array([[1.0]]))
    out = spec.update(np.zeros((1, 1)), np.zeros((1, 1)), bundle(EKI, cov_ug=1.0, cov_gg=1.0), ctx)
    # gain tau / (tau + 0.25) = 1/2 applied to sqrt(0.25 / 0.25) = 1
    assert out[0, 0] == pytest.approx(0.5)


def test_eki_least_squares_limit():
    y = np.array([3.0])
    spec = MethodSpec(EKI, noise_cov=[[0.1]], y=y, tau=0.5)
    h = LinearHierarchy([[2.0]])
    res = run_single_level(spec, h, 0, 500, 200, 5, initial=shifted_normal_initial([0.0], 1.0))
    assert res.qoi_estimate[0] == pytest.approx(1.5, abs=0.02)


def test_eks_examples(rng):
    spec = MethodSpec(EKS, noise_cov=np.eye(2), y=np.array([1.0, -1.0]), prior_cov=np.eye(2))
    u, g = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    xi = rng.standard_normal((3, 2))
    zero = bundle(EKS, cov_uu=np.zeros((2, 2)), cov_ug=np.zeros((2, 2)))
    np.testing.assert_allclose(spec.update(u, g, zero, UpdateContext(0, 0.3, xi)), u, atol=1e-15)
    tau = 0.5
    theta2 = rng.standard_normal((2, 2))
    th = bundle(EKS, cov_uu=np.eye(2) / tau, cov_ug=theta2)
    out = spec.update(u, g, th, UpdateContext(0, tau, np.zeros((3, 2))))
    ref = 0.5 * (u + tau * (spec.y - g) @ theta2.T)
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_eks_semi_implicit_consistency(rng):
    d, k = 3, 4
    prior, gamma = spd(rng, d), spd(rng, k)
    spec = MethodSpec(EKS, noise_cov=gamma, y=rng.standard_normal(k), prior_cov=prior)
    c_uu, c_ug = spd(rng, d), rng.standard_normal((d, k))
    tau = 0.37
    u, g, xi = rng.standard_normal((5, d)), rng.standard_normal((5, k)), rng.standard_normal((5, d))
    out = spec.update(u, g, bundle(EKS, cov_uu=c_uu, cov_ug=c_ug), UpdateContext(0, tau, xi))
    lam, v = np.linalg.eigh(2 * tau * c_uu)
    noise = xi @ ((v * np.sqrt(lam)) @ v.T).T
    lhs = (out - noise) @ (np.eye(d) + tau * c_uu @ np.linalg.inv(prior)).T
    bracket = u + tau * (spec.y - g) @ (c_ug @ np.linalg.inv(gamma)).T
    np.testing.assert_allclose(lhs, bracket, rtol=0, atol=1e-10)


def test_layout_is_enforced():
    spec = MethodSpec(EKI, noise_cov=[[1.0]], y=[0.0])
    with pytest.raises(ValueError, match="expects statistics"):
        spec.update(np.zeros((1, 1)), np.zeros((1, 1)), bundle(ENKF, cov_gg=1.0),
                    UpdateContext(0, 1.0, np.zeros((1, 1))))


def test_spec_validation():
    with pytest.raises(ValueError):
        MethodSpec("ukf", noise_cov=[[1.0]], y=[0.0])
    with pytest.raises(ValueError):
        MethodSpec(EKI, noise_cov=[[0.0]], y=[0.0])
    with pytest.raises(ValueError):
        MethodSpec(EKS, noise_cov=[[1.0]], y=[0.0])
    with pytest.raises(ValueError):
        MethodSpec(ENKF, noise_cov=[[1.0]], y=[[0.0]])


def test_noise_dimensions():
    assert MethodSpec(DENKF, [[1.0]], [[0.0]], H=[[1.0]]).noise_dim(5) == 0
    assert MethodSpec(ENKF, np.eye(2), np.zeros((1, 2)), H=np.ones((2, 5))).noise_dim(5) == 2
    assert MethodSpec(EKI, np.eye(2), [0.0, 0.0]).noise_dim(5) == 2
    assert MethodSpec(EKS, np.eye(2), [0.0, 0.0], prior_cov=np.eye(5)).noise_dim(5) == 5


@pytest.mark.parametrize("kind", [ENKF, DENKF, EKI, EKS])
def test_updates_deterministic_and_rowwise(kind, rng):
    d = 2
    kw = dict(noise_cov=0.5 * np.eye(d))
    if kind in (ENKF, DENKF):
        kw.update(y=rng.standard_normal((1, d)), H=np.eye(d))
    else:
        kw.update(y=rng.standard_normal(d))
    if kind == EKS:
        kw.update(prior_cov=np.eye(d))
    spec = MethodSpec(kind, **kw)
    entries = dict(mean_g=rng.standard_normal(d), cov_gg=spd(rng, d), cov_ug=rng.standard_normal((d, d)),
                   cov_uu=spd(rng, d))
    theta = bundle(kind, **entries)
    u, g, xi = rng.standard_normal((4, d)), rng.standard_normal((4, d)), rng.standard_normal((4, d))
    ctx = UpdateContext(0, 0.3, xi)
    first = spec.update(u, g, theta, ctx)
    again = spec.update(u.copy(), g.copy(), theta, ctx)
    assert first.tobytes() == again.tobytes()
    for j in range(4):
        row = spec.update(u[j], g[j], theta, UpdateContext(0, 0.3, xi[j]))
        np.testing.assert_allclose(row, first[j], atol=1e-14)


def brute_tau(g, y, gamma, tau0=1.0, tau_max=10.0):
    J = len(g)
    ginv = np.linalg.inv(gamma)
    mean = [sum(g[j][i] for j in range(J)) / J for i in range(len(y))]
    total = 0.0
    for j in range(J):
        for k in range(J):
            d = sum((g[k][a] - mean[a]) * ginv[a][b] * (g[j][b] - y[b])
                    for a in range(len(y)) for b in range(len(y))) / J
            total += d * d
    return min(tau0 / (np.sqrt(total) + 1e-10), tau_max)


def test_adaptive_tau_double_loop(rng):
    for J in (2, 3, 7):
        g, y, gamma = rng.standard_normal((J, 3)), rng.standard_normal(3), spd(rng, 3)
        assert adaptive_tau(g, y, gamma, 0.7) == pytest.approx(brute_tau(g, y, gamma, 0.7), rel=1e-12)


def test_adaptive_tau_cap(rng):
    y = np.array([1.0, 2.0])
    assert adaptive_tau(np.tile(y, (5, 1)), y, np.eye(2)) == 10.0
    assert adaptive_tau(np.tile(y + 3, (5, 1)), y, np.eye(2), tau_max=4.0) == 4.0
    with pytest.raises(ValueError):
        adaptive_tau(np.zeros((0, 2)), y, np.eye(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_adaptive_tau_invariant_under_duplication(J, seed):
    r = np.random.default_rng(seed)
    g, y = r.standard_normal((J, 2)), r.standard_normal(2)
    a = adaptive_tau(g, y, np.eye(2), tau_max=np.inf)
    b = adaptive_tau(np.vstack([g, g]), y, np.eye(2), tau_max=np.inf)
    assert a == pytest.approx(b, rel=1e-10)
