"""Counter-based keyed random streams.

Every draw is a pure function of a key (seed, substream, replica, level,
time index, pair index) and a counter, so any particle can be simulated in
any order, on any thread, and reproduce the same numbers.
"""
from dataclasses import dataclass

import numpy as np

from mlek import kernels

STREAM_INIT = 1
STREAM_MODEL = 2
STREAM_UPDATE = 3
STREAM_OBS = 4

_MASK64 = (1 << 64) - 1


def _mix(h, value):
    with np.errstate(over="ignore"):
        v = np.atleast_1d(np.asarray(value, dtype=np.uint64)) + kernels.numpy_backend.GOLDEN
    return kernels.fmix64(h ^ kernels.fmix64(v))


def key_hashes(seed, stream, replica, level, step, pair_index):
    """Hash one key per entry of ``pair_index`` (vectorized over pairs)."""
    h = kernels.fmix64(np.array([seed & _MASK64], dtype=np.uint64))
    for field in (stream, replica, level, step):
        h = _mix(h, int(field) & _MASK64)
    j = np.atleast_1d(np.asarray(pair_index, dtype=np.int64)).astype(np.uint64)
    return _mix(h, j)


@dataclass(frozen=True)
class NoiseKey:
    level: int
    pair_index: int
    step: int
    replica: int = 0
    stream: int = STREAM_MODEL
    seed: int = 0

    def hash(self):
        return key_hashes(
            self.seed, self.stream, self.replica, self.level, self.step, [self.pair_index]
        )[0]

    def normals(self, ndraw):
        return kernels.keyed_normals(np.array([self.hash()]), ndraw)[0]


def ensemble_normals(seed, stream, replica, level, step, n_pairs, ndraw):
    """Draws ``(n_pairs, ndraw)`` for pairs ``0..n_pairs-1`` of one (level, step)."""
    hashes = key_hashes(seed, stream, replica, level, step, np.arange(n_pairs))
    return kernels.keyed_normals(hashes, ndraw)
