"""Deterministic instance generators for experiments and tests."""
from dataclasses import dataclass, field

import numpy as np

from . import _rng

# generator ids, part of the seed path
_GAUSS, _RANKDEF, _DUP, _HEAVY, _ILL, _PLANT = range(1, 7)


def gaussian(n, d, seed=0):
    return _rng.derive_rng(seed, _rng.BENCH, _GAUSS).standard_normal((n, d))


def rank_deficient(n, d, k, seed=0):
    """Product of Gaussian ``n x k`` and ``k x d`` factors."""
    rng = _rng.derive_rng(seed, _rng.BENCH, _RANKDEF)
    return rng.standard_normal((n, k)) @ rng.standard_normal((k, d))


def duplicated_rows(n, d, seed=0, copies=3, block_rows=None):
    """``copies`` stacked copies of one Gaussian block (rank ``min(block_rows, d)``)."""
    rng = _rng.derive_rng(seed, _rng.BENCH, _DUP)
    block_rows = block_rows or max(1, n // copies)
    block = rng.standard_normal((block_rows, d))
    return np.vstack([block] * copies)


def single_heavy_row(n, d, seed=0, weight=1e3):
    """Gaussian matrix whose first row is scaled by ``weight``; its leverage is near 1."""
    A = _rng.derive_rng(seed, _rng.BENCH, _HEAVY).standard_normal((n, d))
    A[0] *= weight
    return A


def ill_conditioned(n, d, kappa=1e6, seed=0):
    """``U diag(s) V^T`` with singular values log-spaced from 1 down to ``1/kappa``."""
    rng = _rng.derive_rng(seed, _rng.BENCH, _ILL)
    U, _ = np.linalg.qr(rng.standard_normal((n, d)))
    V, _ = np.linalg.qr(rng.standard_normal((d, d)))
    s = np.logspace(0, -np.log10(kappa), d)
    return (U * s) @ V.T


def planted_regression(n, d, seed=0, noise=1.0):
    """Gaussian ``A`` and ``b = A x + noise * g``; returns ``(A, b, x)``."""
    rng = _rng.derive_rng(seed, _rng.BENCH, _PLANT)
    A = rng.standard_normal((n, d))
    x = rng.standard_normal(d)
    return A, A @ x + noise * rng.standard_normal(n), x


@dataclass
class BenchSuite:
    """Named generators (each a ``seed -> matrix`` callable) and a seed list."""
    generators: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: list(range(5)))

    def instances(self):
        for name, gen in self.generators.items():
            for s in self.seeds:
                yield name, s, gen(s)

    @classmethod
    def default(cls, n=1024, d=16, seeds=None):
        gens = {
            "gaussian": lambda s: gaussian(n, d, s),
            "rank-deficient": lambda s: rank_deficient(n, d, max(1, d // 2), s),
            "duplicated-rows": lambda s: duplicated_rows(n, d, s),
            "single-heavy-row": lambda s: single_heavy_row(n, d, s),
            "ill-conditioned": lambda s: ill_conditioned(n, d, 1e4, s),
        }
        return cls(gens, list(range(3)) if seeds is None else list(seeds))
