"""Seed derivation.

Every random draw in the package descends from a single 64-bit user seed.
Streams are addressed by a path ``(module_id, *ids)`` and realised with
:class:`numpy.random.SeedSequence` spawn keys, so any sub-draw can be
reproduced in isolation.  Per-column OSNAP draws use a counter-based
splitmix64 hash of ``(seed, stream, column, draw)`` instead, which keeps
them vectorised while remaining addressable column by column.
"""
import numpy as np

MASK64 = (1 << 64) - 1

# module ids, part of the documented derivation; do not renumber
OSNAP_S2 = 1
OSNAP_S1 = 2
SRHT = 3
UNIFORM = 4
SDP = 5
LEVSCORE = 6
BASIS = 7
RANK_SKETCH = 8
REGRESSION = 9
BENCH = 10
POWER = 11
EMBED = 12
AMM = 13


def derive_rng(seed, *path):
    """Generator for the stream ``seed / path``."""
    key = tuple(int(p) & MASK64 for p in path)
    return np.random.default_rng(np.random.SeedSequence(int(seed) & MASK64, spawn_key=key))


def derive_seed(seed, *path):
    """64-bit child seed for handing a sub-computation its own root."""
    return int(derive_rng(seed, *path).integers(0, 2**63, dtype=np.int64))


_C = np.array([0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB,
               0xD6E8FEB86659FD93], dtype=np.uint64)


def _splitmix(x):
    x = x + _C[0]
    x = (x ^ (x >> np.uint64(30))) * _C[1]
    x = (x ^ (x >> np.uint64(27))) * _C[2]
    return x ^ (x >> np.uint64(31))


def counter_uniform(seed, stream, index, draw):
    """Uniforms in [0, 1) addressed by ``(seed, stream, index, draw)``.

    ``index`` may be an integer array; the result has its shape.
    """
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix(np.uint64(int(seed) & MASK64) ^ _splitmix(np.uint64(stream)))
        h = _splitmix(h ^ _splitmix(np.uint64(draw) * _C[3]))
        h = _splitmix(h ^ idx)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
