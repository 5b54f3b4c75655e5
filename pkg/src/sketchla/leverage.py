"""Leverage-score row sampling.

Row norms of ``A R`` approximate leverage scores when ``R`` comes from a QR
of a constant-factor embedding of ``A``.  ``two_stage_sample`` turns cheap
JL estimates of those norms into Bernoulli row samples whose inclusion
probabilities sit between ``s/16`` and ``s`` times the normalised norms.
"""
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _rng
from .embed import EmbedConfig, constant_embed
from .linalg import (as_dense, numerical_rank, qr_preconditioner, rank_revealing_preconditioner,
                     svd_thin)
from .report import RunReport


@dataclass(frozen=True)
class LevSampleConfig:
    epsilon: float = 0.25
    alpha: float = 0.25
    s: float = None
    c_s: float = 8.0
    jl_cols_stage1: int = 8
    stage2_cols: int = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.s is not None and self.s <= 0:
            raise ValueError("s must be positive")
        if self.c_s <= 0 or self.jl_cols_stage1 < 1:
            raise ValueError("c_s and jl_cols_stage1 must be positive")

    def oversample(self, d):
        """``s``, defaulting to ``c_s * d * log(d) / epsilon^2``."""
        if self.s is not None:
            return float(self.s)
        return self.c_s * d * max(1.0, math.log(d)) / self.epsilon ** 2


@dataclass
class SampledRows:
    indices: np.ndarray
    probs: np.ndarray
    rows: np.ndarray
    scaled: bool = True

    def __post_init__(self):
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError("sampled indices must be distinct")
        if np.any(self.probs <= 0) or np.any(self.probs > 1):
            raise ValueError("inclusion probabilities must lie in (0, 1]")


def qr_lev_factors(A, cfg=None, normalize=True, rank_adaptive=False):
    """``R`` with ``||a_i R||^2`` approximating the leverage score of row ``i``.

    ``R`` inverts the triangular factor of a QR of ``constant_embed(A)``.
    With ``normalize`` it is rescaled by the smallest singular value of the
    embedding on ``col(A)``, so ``tau_i / xi^2 <= ||a_i R||^2 <= tau_i``.
    Returns ``(R, xi)`` with ``xi`` the measured distortion.  A rank-deficient
    sketch raises unless ``rank_adaptive`` is set, in which case ``R`` is the
    ``d x k`` SVD preconditioner of the sketch.
    """
    cfg = cfg or LevSampleConfig()
    ecfg = EmbedConfig(alpha=cfg.alpha, seed=_rng.derive_seed(cfg.seed, _rng.LEVSCORE, 0))
    emb = constant_embed(A, ecfg, timing=False)
    if rank_adaptive and numerical_rank(emb.sketched) < A.shape[1]:
        _, R = rank_revealing_preconditioner(emb.sketched)
    else:
        _, R = qr_preconditioner(emb.sketched)
    xi = emb.report.metrics["distortion"]
    if normalize:
        U = svd_thin(as_dense(A)).U
        smin = np.linalg.svd(emb.operator.apply(U), compute_uv=False)[-1]
        R = R * smin
    return R, xi


def _row_sq_norms(A, X):
    Y = np.asarray(A @ X)
    return np.einsum("ij,ij->i", Y, Y)


def stage2_cols_default(n):
    return max(1, math.ceil(4 * math.log2(max(n, 2))))


def two_stage_sample(A, R, s, alpha=0.25, seed=0, jl_cols_stage1=8, stage2_cols=None):
    """Bernoulli row sample with ``f_i`` close to ``s * ||a_i R||^2 / ||A R||_F^2``.

    Stage 1 estimates every row norm with ``jl_cols_stage1`` Gaussian
    columns and keeps row ``i`` with an inflated probability ``q_i``.  Stage
    2 re-estimates the kept rows with ``ceil(4 log2 n)`` columns and accepts
    with probability ``f_i / q_i``, where ``f_i = min(q_i, target_i)`` and
    ``target_i = min(1, s * est_i / (4 Z))``.  ``alpha`` is unused here and
    kept so callers can pass a shared config.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    n = A.shape[0]
    R = as_dense(R)
    k = R.shape[1]
    k1 = int(jl_cols_stage1)
    k2 = stage2_cols or stage2_cols_default(n)
    G1 = _rng.derive_rng(seed, _rng.LEVSCORE, 1).standard_normal((k, k1)) / math.sqrt(k1)
    est1 = _row_sq_norms(A, R @ G1)
    Z = est1.sum()
    if Z == 0:
        return SampledRows(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros((0, A.shape[1])))
    # a k1-column JL estimate undershoots by a factor n^(1/k1) only with
    # probability about 1/n; the log n factor pads that further
    beta = n ** (1.0 / k1) * max(1.0, math.log(n))
    q = np.minimum(1.0, beta * s * est1 / Z)
    u1 = _rng.derive_rng(seed, _rng.LEVSCORE, 2).random(n)
    cand = np.flatnonzero(u1 < q)
    G2 = _rng.derive_rng(seed, _rng.LEVSCORE, 3).standard_normal((k, k2)) / math.sqrt(k2)
    # the Frobenius norm is a sum of n estimates and is already accurate
    Z2 = _row_sq_norms(A, R @ _rng.derive_rng(seed, _rng.LEVSCORE, 4)
                       .standard_normal((k, k2)) / math.sqrt(k2)).sum()
    Asub = A[cand]
    est2 = _row_sq_norms(Asub, R @ G2)
    target = np.minimum(1.0, s * est2 / (4.0 * Z2))
    f = np.minimum(q[cand], target)
    accept = np.clip(f / q[cand], 0.0, 1.0)
    u2 = _rng.derive_rng(seed, _rng.LEVSCORE, 5).random(cand.size)
    keep = (u2 < accept) & (f > 0)
    idx = cand[keep]
    f = f[keep]
    rows = as_dense(A[idx]) / np.sqrt(f)[:, None]
    return SampledRows(idx, f, rows)


def eps_subspace_embed(A, cfg=None, timing=True):
    """Leverage-score sample giving a ``(1 +- eps)`` subspace embedding.

    Returns ``(SA_scaled, SampledRows, RunReport)``.  The report records
    the largest deviation of a singular value of ``S U`` from 1.
    """
    cfg = cfg or LevSampleConfig()
    t0 = time.perf_counter()
    if not sp.issparse(A):
        A = as_dense(A)
    n, d = A.shape
    R, xi = qr_lev_factors(A, cfg, normalize=False, rank_adaptive=True)
    s = cfg.oversample(d)
    smp = two_stage_sample(A, R, s, cfg.alpha, _rng.derive_seed(cfg.seed, _rng.LEVSCORE, 9),
                           cfg.jl_cols_stage1, cfg.stage2_cols)
    U = svd_thin(as_dense(A)).U
    SU = U[smp.indices] / np.sqrt(smp.probs)[:, None]
    sv = np.linalg.svd(SU, compute_uv=False) if SU.size else np.zeros(U.shape[1])
    sv = np.concatenate([sv, np.zeros(U.shape[1] - sv.size)])
    dev = float(np.max(np.abs(sv - 1.0))) if sv.size else 0.0
    rep = RunReport("levscore", seed=cfg.seed,
                    params={"epsilon": cfg.epsilon, "alpha": cfg.alpha, "c_s": cfg.c_s,
                            "s": s, "jl_cols_stage1": cfg.jl_cols_stage1,
                            "stage2_cols": cfg.stage2_cols or stage2_cols_default(n)},
                    rows_in=n, cols_in=d, rows_out=smp.indices.size)
    rep.metrics.update({"singular_deviation": dev, "sigma_min": float(sv.min()) if sv.size else 0.0,
                        "sigma_max": float(sv.max()) if sv.size else 0.0,
                        "embedding_distortion": xi, "row_bound": s})
    rep.passed = dev <= cfg.epsilon and smp.indices.size <= s
    rep.runtime_ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return smp.rows, smp, rep


def amm_sample(M, r, seed=0):
    """``S M`` for ``r`` i.i.d. row-norm samples, rows scaled by ``1/sqrt(r p_i)``."""
    M = as_dense(M)
    if r < 1:
        raise ValueError("r must be >= 1")
    w = np.einsum("ij,ij->i", M, M)
    tot = w.sum()
    if tot == 0:
        return np.zeros((r, M.shape[1]))
    prob = w / tot
    idx = _rng.derive_rng(seed, _rng.AMM).choice(M.shape[0], size=r, p=prob)
    return M[idx] / np.sqrt(r * prob[idx])[:, None]
