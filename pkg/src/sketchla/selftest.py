"""Quick invariant checks run by ``sketchla selftest``."""
import numpy as np
import scipy.linalg as la

from . import bench
from .basis import select_independent_rows
from .embed import EmbedConfig, constant_embed
from .leverage import LevSampleConfig, eps_subspace_embed
from .linalg import distortion, exact_leverage_scores, numerical_rank, qr_preconditioner
from .mmio import format_matrix_market, parse_matrix_market
from .regression import solve_regression
from .sdp import build_packing_instance, solve_packing_sdp
from .sketch import Composite, Osnap, StackedSrht, UniformSample, fwht


def _fwht():
    rng = np.random.default_rng(0)
    err = 0.0
    for L in (1, 2, 4, 8, 16, 32, 64):
        v = rng.standard_normal(L)
        err = max(err, np.max(np.abs(fwht(v) - la.hadamard(L) @ v)))
    return err <= 1e-10, err


def _foster():
    A = bench.rank_deficient(60, 12, 5, seed=1)
    gap = abs(exact_leverage_scores(A).sum() - numerical_rank(A))
    return gap <= 1e-8, gap


def _qr():
    M = bench.gaussian(64, 16, seed=2)
    _, R = qr_preconditioner(M)
    k = distortion(M @ R)
    return abs(k - 1) <= 1e-6, k


def _osnap():
    S = Osnap(50, 20, 3, seed=3).materialize()
    nnz = np.diff(S.tocsc().indptr)
    ok = np.all(nnz == 3) and np.allclose(np.abs(S.data), 1 / np.sqrt(3))
    return bool(ok), int(nnz.max())


def _linearity():
    op = Composite([Osnap(64, 32, 2, seed=4), StackedSrht(32, 2, seed=4),
                    UniformSample(64, 20, seed=4)])
    rng = np.random.default_rng(4)
    x, y = rng.standard_normal(64), rng.standard_normal(64)
    err = np.linalg.norm(op.apply(x + 2 * y) - op.apply(x) - 2 * op.apply(y))
    return err <= 1e-10 * max(1.0, np.linalg.norm(op.apply(x))), err


def _sdp():
    p = 20
    inst = build_packing_instance(np.eye(p), np.eye(p))
    wv = solve_packing_sdp(inst)
    return wv.objective <= 1.05 / p, wv.objective * p


def _embed():
    A = bench.gaussian(1024, 8, seed=5)
    res = constant_embed(A, EmbedConfig(seed=5), timing=False)
    xi = res.report.metrics["distortion"]
    return bool(np.isfinite(xi) and res.sketched.shape[0] <= 80), xi


def _levscore():
    A = bench.gaussian(2048, 8, seed=6)
    _, _, rep = eps_subspace_embed(A, LevSampleConfig(epsilon=0.5, seed=6), timing=False)
    dev = rep.metrics["singular_deviation"]
    return dev <= 0.5, dev


def _basis():
    A = bench.duplicated_rows(30, 12, seed=7, block_rows=4)
    r = select_independent_rows(A, seed=7)
    return r.k == 4 and numerical_rank(A[r.indices]) == 4, r.k


def _regress():
    A, b, _ = bench.planted_regression(2048, 8, seed=8)
    r = solve_regression(A, b, 0.1, seed=8, oracle=True, timing=False)
    return r.oracle_ratio <= 1.1, r.oracle_ratio


def _mmio():
    A = bench.gaussian(5, 3, seed=9)
    B = parse_matrix_market(format_matrix_market(A))
    return bool(np.array_equal(A, B)), 0


CHECKS = [
    ("fwht-vs-explicit", _fwht),
    ("leverage-sum-equals-rank", _foster),
    ("qr-preconditioner", _qr),
    ("osnap-structure", _osnap),
    ("composite-linearity", _linearity),
    ("sdp-orthonormal-rows", _sdp),
    ("constant-embedding", _embed),
    ("leverage-embedding", _levscore),
    ("basis-duplicated-rows", _basis),
    ("regression-oracle", _regress),
    ("matrix-market-round-trip", _mmio),
]


def run_selftest():
    """Run every check; returns ``{name: {"pass": bool, "value": float}}``."""
    out = {}
    for name, fn in CHECKS:
        ok, val = fn()
        out[name] = {"pass": bool(ok), "value": float(val)}
    return out
