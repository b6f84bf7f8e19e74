import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def jacobi_eigh(a, sweeps=100, tol=1e-15):
    """Cyclic Jacobi eigensolver, kept independent of LAPACK for oracles."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * max(np.abs(a).max(), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a), v


from mlek.models.base import ModelHierarchy  # noqa: E402


class LinearHierarchy(ModelHierarchy):
    """``G_l(u) = A u (1 + shift * 2**-l)``, deterministic, for oracle tests."""

    stochastic = False

    def __init__(self, A, shift=0.0, beta=2.0, gamma=1.0):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.shift = shift
        self.beta, self.gamma = beta, gamma
        self.output_dim, self.state_dim = self.A.shape

    def evaluate(self, u, level, hashes=None, path_level=None):
        u = np.atleast_2d(u)
        return (u @ self.A.T) * (1.0 + self.shift * 2.0**-level)


class CountingHierarchy(ModelHierarchy):
    """Wraps a hierarchy and counts evaluations per level independently of the engine."""

    def __init__(self, inner):
        self.inner = inner
        self.beta, self.gamma = inner.beta, inner.gamma
        self.state_dim, self.output_dim = inner.state_dim, inner.output_dim
        self.stochastic = inner.stochastic
        self.counts = {}

    def cost(self, level):
        return self.inner.cost(level)

    def evaluate(self, u, level, hashes=None, path_level=None):
        self.counts[level] = self.counts.get(level, 0) + np.atleast_2d(u).shape[0]
        return self.inner.evaluate(u, level, hashes, path_level)


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """One pass/fail line per acceptance criterion, echoed in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
