"""Subspace embeddings built from the sketch operators.

``polylog_embed`` chains two OSNAP stages, a stacked SRHT and a uniform row
sample.  ``constant_embed`` adds a diagonal reweighting of the sampled rows
found by the packing SDP in :mod:`sketchla.sdp`.
"""
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import _rng
from .linalg import (as_dense, distortion, numerical_rank, rank_revealing_preconditioner,
                     svd_thin)
from .report import RunReport
from .sdp import build_packing_instance, default_target, solve_packing_sdp, verify_weights
from .sketch import Composite, DiagonalWeights, IdentityOp, Osnap, StackedSrht, UniformSample


@dataclass(frozen=True)
class EmbedConfig:
    alpha: float = 0.25
    osnap_s2_rows_const: float = 4.0
    osnap_s1_rows_const: float = 2.0
    srht_blocks: int = 8
    sample_const: float = 10.0
    sdp: bool = True
    seed: int = 0
    sdp_accuracy: float = 0.05
    sdp_max_iter: int = 2000
    projection: str = "exact"
    k_hint: int = None

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.srht_blocks < 1:
            raise ValueError("srht_blocks must be >= 1")
        for name in ("osnap_s2_rows_const", "osnap_s1_rows_const", "sample_const"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def preset(cls, name, **kw):
        """``"default"``, ``"alpha-0.1"`` or ``"alpha-1/log d"`` (needs ``d=``)."""
        d = kw.pop("d", None)
        if name == "default":
            return cls(**kw)
        if name == "alpha-0.1":
            return cls(alpha=0.1, **kw)
        if name == "alpha-1/log d":
            if d is None:
                raise ValueError("preset 'alpha-1/log d' needs d")
            return cls(alpha=min(1.0, 1.0 / math.log(max(d, 3))), **kw)
        raise ValueError(f"unknown preset {name!r}")


@dataclass
class EmbedResult:
    sketched: np.ndarray
    operator: object
    weights: object = None
    report: RunReport = None
    dims: dict = field(default_factory=dict)


def _log(k):
    # natural log, floored at 1 so tiny k still gets a positive row count
    return max(1.0, math.log(k))


def rank_adaptive_dims(A, k_hint=None, cfg=None):
    """Stage sizes for an embedding of a rank-``k`` subspace.

    ``k`` is ``k_hint`` (clamped to ``d``) or the numerical rank of a small
    OSNAP sketch of ``A``.
    """
    cfg = cfg or EmbedConfig()
    n, d = A.shape
    if k_hint is None:
        rows = min(n, 4 * d)
        S = Osnap(n, rows, min(4, rows), cfg.seed, stream=_rng.EMBED)
        k = numerical_rank(S.apply(A))
    else:
        if k_hint < 1:
            raise ValueError("k_hint must be >= 1")
        k = int(k_hint)
        if k > d:
            warnings.warn(f"k_hint={k} exceeds d={d}; clamped", stacklevel=2)
            k = d
    k = max(k, 1)
    lg = _log(k)
    rows2 = math.ceil(cfg.osnap_s2_rows_const * k ** (1 + cfg.alpha) * lg)
    rows1 = math.ceil(cfg.osnap_s1_rows_const * k * lg)
    return {
        "k": k,
        "s2_rows": rows2,
        "s2_nnz": math.ceil(1 / cfg.alpha),
        "s1_rows": rows1,
        "s1_nnz": math.ceil(lg),
        "srht_blocks": cfg.srht_blocks,
        "p": math.ceil(cfg.sample_const * k),
    }


def _osnap_or_identity(n_in, rows, s, seed, stream):
    # a stage that would not shrink the matrix is skipped
    if rows >= n_in:
        return IdentityOp(n_in)
    return Osnap(n_in, rows, min(s, rows), seed, stream)


def _front(A, cfg, dims):
    n = A.shape[0]
    S2 = _osnap_or_identity(n, dims["s2_rows"], dims["s2_nnz"], cfg.seed, _rng.OSNAP_S2)
    S1 = _osnap_or_identity(S2.out_dim, dims["s1_rows"], dims["s1_nnz"], cfg.seed, _rng.OSNAP_S1)
    B = S1.apply(S2.apply(A))
    M = StackedSrht(B.shape[0], cfg.srht_blocks, cfg.seed)
    S = UniformSample(M.out_dim, dims["p"], cfg.seed)
    return S2, S1, B, M, S


def _basis(A):
    return svd_thin(A).U


def _finish(report, A, op, sketched, t0, timing):
    n, d = A.shape
    report.rows_in, report.cols_in, report.rows_out = n, d, sketched.shape[0]
    xi = distortion(op.apply(_basis(A))) if n else 1.0
    report.metrics["distortion"] = xi
    report.runtime_ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return xi


def _params(cfg, dims):
    return {"alpha": cfg.alpha, "osnap_s2_rows_const": cfg.osnap_s2_rows_const,
            "osnap_s1_rows_const": cfg.osnap_s1_rows_const, "srht_blocks": cfg.srht_blocks,
            "sample_const": cfg.sample_const, "sdp": cfg.sdp, "dims": dims}


def _degenerate(A, cfg, t0, timing):
    A = as_dense(A)
    op = IdentityOp(A.shape[0])
    rep = RunReport("embed", seed=cfg.seed, params=_params(cfg, {}))
    _finish(rep, A, op, A, t0, timing)
    rep.flag("degenerate")
    return EmbedResult(A.copy(), op, None, rep, {})


def polylog_embed(A, cfg=None, timing=True):
    """``S M S1 S2 A`` without reweighting.

    Returns an :class:`EmbedResult` whose report holds the distortion of the
    sketch on an orthonormal basis of ``col(A)``.
    """
    cfg = cfg or EmbedConfig(sdp=False)
    t0 = time.perf_counter()
    n, d = A.shape
    if d < 2:
        return _degenerate(A, cfg, t0, timing)
    if not sp.issparse(A):
        A = as_dense(A)
    dims = rank_adaptive_dims(A, cfg.k_hint, cfg)
    S2, S1, B, M, S = _front(A, cfg, dims)
    op = Composite([S2, S1, M, S])
    sketched = S.apply(M.apply(B))
    rep = RunReport("embed", seed=cfg.seed, params=_params(cfg, dims))
    rep.metrics["variant"] = "polylog"
    _finish(rep, as_dense(A) if sp.issparse(A) else A, op, sketched, t0, timing)
    return EmbedResult(sketched, op, None, rep, dims)


def constant_embed(A, cfg=None, timing=True):
    """Polylog pipeline followed by SDP row weights ``sqrt(p w_i)``.

    Rows with zero weight are dropped, so at most ``p`` rows remain.
    """
    cfg = cfg or EmbedConfig()
    if not cfg.sdp:
        return polylog_embed(A, cfg, timing)
    t0 = time.perf_counter()
    n, d = A.shape
    if d < 2:
        return _degenerate(A, cfg, t0, timing)
    if not sp.issparse(A):
        A = as_dense(A)
    dims = rank_adaptive_dims(A, cfg.k_hint, cfg)
    S2, S1, B, M, S = _front(A, cfg, dims)
    p = S.out_dim
    rep = RunReport("embed", seed=cfg.seed, params=_params(cfg, dims))
    rep.metrics["variant"] = "constant"
    Q, R = rank_revealing_preconditioner(B)
    X = M.rows(S.indices)
    inst = build_packing_instance(X, Q, R=R, B=B, method=cfg.projection)
    target = default_target(inst)
    wv = solve_packing_sdp(inst, target_C=target if target > 0 else None,
                           accuracy=cfg.sdp_accuracy, max_iter=cfg.sdp_max_iter,
                           seed=_rng.derive_seed(cfg.seed, _rng.SDP))
    W = DiagonalWeights(np.sqrt(p * wv.w), drop_zero=True)
    op = Composite([S2, S1, M, S, W])
    sketched = W.apply(S.apply(M.apply(B)))
    for f in wv.flags:
        rep.flag(f)
    rep.metrics.update({
        "sdp_objective": wv.objective,
        "sdp_lower_bound": wv.lower_bound,
        "sdp_iterations": wv.iterations,
        "sdp_verified": verify_weights(wv, inst),
        "target_C": target,
        "uniform_objective": wv.trace[0] if wv.trace else 0.0,
    })
    if target > 0 and wv.objective > (1 + cfg.sdp_accuracy) * target:
        rep.flag("above-target")
    _finish(rep, as_dense(A) if sp.issparse(A) else A, op, sketched, t0, timing)
    return EmbedResult(sketched, op, wv, rep, dims)


def with_overrides(cfg, **kw):
    return replace(cfg, **kw)
