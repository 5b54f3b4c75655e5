"""Selection of a maximal set of linearly independent rows."""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import _rng
from .embed import EmbedConfig, constant_embed
from .leverage import two_stage_sample
from .linalg import (RANK_TOL_FACTOR, as_dense, numerical_rank,
                     rank_revealing_preconditioner, rank_threshold)

RANK_SKETCH_C = 11


@dataclass
class RankSketch:
    S: sp.csr_matrix
    c: float
    seed: int
    k_target: int

    def apply(self, A):
        """``A S^T``."""
        return np.asarray(as_dense(A @ self.S.T) if sp.issparse(A) else A @ self.S.T)


@dataclass
class BasisResult:
    indices: np.ndarray
    k: int
    iterations: int
    trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    tol_factor: float = RANK_TOL_FACTOR


def rank_preserving_sketch(d, k_target, seed=0, c=RANK_SKETCH_C):
    """Sparse ``(c k) x d`` sketch with at most two nonzeros per column.

    The ``2d`` nonzeros are dealt round-robin over the rows after a seeded
    shuffle, so every row holds at most ``ceil(2d / (c k))`` of them.  Values
    are Gaussian, which avoids the exact cancellations a sign pattern can
    produce on short cycles.
    """
    if not 1 <= k_target <= d:
        raise ValueError("need 1 <= k_target <= d")
    m = int(math.ceil(c * k_target))
    rng = _rng.derive_rng(seed, _rng.RANK_SKETCH, k_target)
    slots = rng.permutation(2 * d)
    rows = slots % m
    cols = np.repeat(np.arange(d), 2)
    vals = rng.standard_normal(2 * d)
    S = sp.csr_matrix((vals, (rows, cols)), shape=(m, d))
    S.sum_duplicates()
    return RankSketch(S, c, seed, k_target)


def _abs_tol(M, tol_factor):
    return rank_threshold(la.norm(M, 2), M.shape, tol_factor) if M.size else 0.0


def orthogonal_complement(rows, tol_factor=RANK_TOL_FACTOR, atol=None):
    """Orthonormal rows ``Z`` spanning the null space of ``rows``.

    Singular values at or below ``atol`` (default: the rank threshold of
    ``rows``) count as zero.
    """
    M = as_dense(rows)
    if M.ndim != 2:
        raise ValueError("rows must be a matrix")
    c = M.shape[1]
    if M.shape[0] == 0 or not np.any(M):
        return np.eye(c)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    thr = rank_threshold(s[0], M.shape, tol_factor) if atol is None else atol
    r = int(np.count_nonzero(s > thr))
    return Vt[r:].copy()


def independent_subset(rows, global_indices=None, tol_factor=RANK_TOL_FACTOR, atol=None):
    """Indices of a maximal independent subset, earlier rows preferred.

    Greedy Gram-Schmidt in index order.  Rank is counted against ``atol``
    (default: the rank threshold of ``rows``); if the greedy count disagrees
    with it, column-pivoted QR of ``rows^T`` decides instead.
    """
    M = as_dense(rows)
    gi = np.arange(M.shape[0]) if global_indices is None else np.asarray(global_indices)
    if M.shape[0] == 0:
        return gi[:0]
    smax = la.norm(M, 2) if M.size else 0.0
    if smax == 0:
        return gi[:0]
    thr = rank_threshold(smax, M.shape, tol_factor) if atol is None else atol
    r = int(np.count_nonzero(la.svdvals(M) > thr))
    Q = np.zeros((M.shape[1], 0))
    keep = []
    for i, v in enumerate(M):
        res = v - Q @ (Q.T @ v)
        res = res - Q @ (Q.T @ res)
        nr = np.linalg.norm(res)
        if nr > thr:
            keep.append(i)
            Q = np.column_stack([Q, res / nr])
            if len(keep) == r:
                break
    if len(keep) != r or np.count_nonzero(la.svdvals(M[keep]) > thr) != r:
        _, _, piv = la.qr(M.T, mode="economic", pivoting=True)
        keep = sorted(piv[:r])
    return gi[np.asarray(keep, dtype=np.int64)]


def _residual_rank(BZ, atol):
    return int(np.count_nonzero(la.svdvals(BZ) > atol)) if BZ.size else 0


def _approx_leverage(M, seed):
    """Leverage estimates from a constant-factor embedding of ``M``."""
    if M.shape[1] < 2:
        return np.einsum("ij,ij->i", M, M)
    emb = constant_embed(M, EmbedConfig(seed=seed), timing=False)
    _, R = rank_revealing_preconditioner(emb.sketched)
    MR = M @ R
    return np.einsum("ij,ij->i", MR, MR)


def grow_basis(B, seed=0, c_r=10.0, max_iter=None, initial=None, tol_factor=RANK_TOL_FACTOR,
               atol=None):
    """Grow an independent row set of ``B`` until its rows span ``B``.

    Each round samples ``ceil(c_r r)`` rows by approximate leverage of the
    residual ``B Z^T`` (``r`` its rank, ``Z`` the complement of the current
    rows) and keeps the independent ones.  After ``max_iter`` rounds the
    remaining rows are scanned deterministically and ``"fallback"`` is
    flagged.  ``atol`` is the absolute singular-value cutoff used for every
    rank decision; it defaults to the rank threshold of ``B``.
    """
    B = as_dense(B)
    N, c = B.shape
    if N < 1:
        raise ValueError("B needs at least one row")
    if max_iter is None:
        max_iter = int(10 * math.log2(max(N, 2)) + 20)
    scale = la.norm(B, 2) if B.size else 0.0
    if atol is None:
        atol = rank_threshold(scale, B.shape, tol_factor)
    sel = [] if initial is None else list(initial)
    trace, flags = [], []
    if scale == 0:
        return BasisResult(np.zeros(0, dtype=np.int64), 0, 0, trace, flags, tol_factor)
    Z = orthogonal_complement(B[sel], atol=atol).T if sel else np.eye(c)
    rng = _rng.derive_rng(seed, _rng.BASIS)
    it = 0
    while True:
        BZ = B @ Z
        r = _residual_rank(BZ, atol)
        if r == 0 or Z.shape[1] == 0:
            break
        if it >= max_iter:
            flags.append("fallback")
            taken = set(sel)
            cand = sel + [i for i in range(N) if i not in taken]
            new = independent_subset(B[cand], np.asarray(cand), atol=atol)
            trace.append({"iteration": it, "residual_rank": r, "sampled": N - len(sel),
                          "gained": len(new) - len(sel)})
            sel = list(new)
            break
        it += 1
        lev = _approx_leverage(BZ, int(rng.integers(0, 2**62)))
        tot = lev.sum()
        count = int(math.ceil(c_r * r))
        if tot > 0:
            draw = np.unique(rng.choice(N, size=count, p=lev / tot))
        else:
            draw = np.zeros(0, dtype=np.int64)
        taken = set(sel)
        fresh = [i for i in draw.tolist() if i not in taken]
        cand = sel + fresh
        new = list(independent_subset(B[cand], np.asarray(cand, dtype=np.int64), atol=atol))
        gained = len(new) - len(sel)
        trace.append({"iteration": it, "residual_rank": r, "sampled": len(draw), "gained": gained})
        if gained > 0:
            sel = new
            Z = orthogonal_complement(B[sel], atol=atol).T
    idx = np.asarray(sel, dtype=np.int64)
    return BasisResult(idx, idx.size, it, trace, flags, tol_factor)


def estimate_rank(A, seed=0, k0=16, c=RANK_SKETCH_C):
    """Rank of ``A`` from rank-preserving sketches of doubling size.

    Returns ``(k, sketch)`` where ``sketch`` is None when ``c k >= d`` made
    sketching pointless.
    """
    d = A.shape[1]
    k = min(k0, d)
    prev = None
    while True:
        if c * k >= d:
            return numerical_rank(as_dense(A)), None
        rs = rank_preserving_sketch(d, k, seed, c)
        r = numerical_rank(rs.apply(A))
        if r < k or r == prev or k == d:
            return r, rs
        prev = r
        k = min(2 * k, d)


def select_independent_rows(A, seed=0, alpha=0.25, c_r=10.0, c_lev=16.0,
                            tol_factor=RANK_TOL_FACTOR):
    """Indices of ``rank(A)`` linearly independent rows of ``A``.

    Shrinks columns with a rank-preserving sketch, keeps ``O(k log k)`` rows
    by leverage sampling, grows a basis on them, and finally completes it
    against all of ``A`` if sampling or sketching lost rank.
    """
    n, d = A.shape
    Ad = as_dense(A)
    if not np.any(Ad):
        return BasisResult(np.zeros(0, dtype=np.int64), 0, 0, [], [], tol_factor)
    k, rs = estimate_rank(A, seed)
    B = Ad if rs is None else rs.apply(A)
    flags = []
    k = max(k, 1)
    if n > 4 * k and B.shape[1] >= 2:
        emb = constant_embed(B, EmbedConfig(alpha=alpha, seed=_rng.derive_seed(seed, _rng.BASIS, 1)),
                             timing=False)
        _, R = rank_revealing_preconditioner(emb.sketched)
        s = c_lev * k * max(1.0, math.log(k))
        smp = two_stage_sample(B, R, s, alpha, _rng.derive_seed(seed, _rng.BASIS, 2))
        cand = smp.indices
    else:
        cand = np.arange(n)
    # one absolute cutoff per matrix keeps every rank decision consistent
    atol_B = _abs_tol(B, tol_factor)
    res = grow_basis(B[cand], _rng.derive_seed(seed, _rng.BASIS, 3), c_r, atol=atol_B)
    sel = cand[res.indices]
    trace = list(res.trace)
    flags += res.flags
    iters = res.iterations
    # completion against the full matrices; usually a no-op
    for M, name in ((B, "sample-short"), (Ad, "sketch-short")):
        if M is Ad and rs is None:
            continue
        more = grow_basis(M, _rng.derive_seed(seed, _rng.BASIS, 4), c_r, initial=sel,
                          atol=atol_B if M is B else _abs_tol(Ad, tol_factor))
        if more.indices.size > sel.size:
            flags.append(name)
        sel = more.indices
        trace += more.trace
        flags += more.flags
        iters += more.iterations
    return BasisResult(np.asarray(sel, dtype=np.int64), int(sel.size), iters, trace,
                       sorted(set(flags)), tol_factor)


def select_independent_columns(A, seed=0, **kw):
    """Column version, by transposition."""
    At = A.T.tocsr() if sp.issparse(A) else np.asarray(A).T
    return select_independent_rows(At, seed, **kw)
