"""Time the numba kernels against their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Each kernel
is warmed up once (JIT compilation is excluded) and the best of N timings
is reported, with the largest deviation between the two backends.
"""
import argparse
import time

import numpy as np

from mlek import rng
from mlek.kernels import numba_backend, numpy_backend
from mlek.models.darcy import DarcyHierarchy, _assemble


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    hashes = rng.key_hashes(1, rng.STREAM_MODEL, 0, 6, 0, np.arange(100_000))
    u = np.linspace(-1.0, 1.0, hashes.size)
    yield "keyed_normals 1e5 x 16", lambda b: b.keyed_normals(hashes, 16)
    yield "ou_euler 1e5 paths, 64 steps", lambda b: b.ou_euler(u, hashes, 64, 1, 0.5)

    h = DarcyHierarchy(grid_offset=7)
    for level in (4, 8, 11):
        M = h.grid_size(level)
        J = 2000
        x = np.arange(M + 1) / M
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        basis = h._level_data(level)[1][0]
        u = np.random.default_rng(0).standard_normal((J, 16))
        a = np.exp(u @ basis).reshape(J, M + 1, M + 1)
        ab, rhs = _assemble(a, M, h.forcing(x1, x2)[1:-1, 1:-1])
        ab, rhs = np.ascontiguousarray(ab), np.ascontiguousarray(rhs)
        yield f"banded_spd_solve {J} systems, M={M}", lambda b, ab=ab, rhs=rhs: b.banded_spd_solve(ab, rhs)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if numba_backend is None:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, run in cases():
        t_np = best_of(lambda: run(numpy_backend), args.repeat)
        t_nb = best_of(lambda: run(numba_backend), args.repeat)
        diff = np.max(np.abs(run(numpy_backend) - run(numba_backend)))
        print(f"{name:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
