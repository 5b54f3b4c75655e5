"""Dense/sparse containers, decompositions, and exact oracles.

Dense matrices are ``float64`` numpy arrays and sparse inputs are
``scipy.sparse`` CSR matrices.  Everything here is deterministic for fixed
inputs; the only randomness is the seeded Lanczos start vector of
:func:`spectral_norm`.
"""
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, aslinearoperator, svds

from . import _rng
from .errors import RankDeficientError, ShapeError

EPS = np.finfo(np.float64).eps
RANK_TOL_FACTOR = 10.0


class SvdFactors(NamedTuple):
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def k(self):
        return self.sigma.shape[0]


class SpectralEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def is_sparse(A):
    return sp.issparse(A)


def as_dense(A):
    """Return ``A`` as a finite float64 ndarray (sparse input is densified)."""
    if sp.issparse(A):
        A = A.toarray()
    A = np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_csr(A):
    """Canonical CSR copy: sorted indices, summed duplicates, no explicit zeros."""
    S = sp.csr_matrix(A, dtype=np.float64, copy=True)
    S.sum_duplicates()
    S.eliminate_zeros()
    S.sort_indices()
    if not np.all(np.isfinite(S.data)):
        raise ValueError("matrix has non-finite entries")
    return S


def rank_threshold(sigma_max, shape, tol_factor=RANK_TOL_FACTOR):
    return tol_factor * max(shape) * EPS * sigma_max


def matmul(A, B):
    """Product ``A @ B`` for dense or CSR ``A`` and dense ``B``."""
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[0]:
        raise ShapeError(f"{A.shape} @ {B.shape}")
    if sp.issparse(A):
        return np.asarray(A @ B)
    return np.asarray(A, dtype=np.float64) @ B


def svd_thin(A, tol_factor=RANK_TOL_FACTOR):
    """Thin SVD truncated at the numerical rank.

    Singular values at or below ``tol_factor * max(n, d) * eps * sigma_max``
    are discarded, so a zero matrix yields ``k = 0`` factors.
    """
    A = as_dense(A)
    n, d = A.shape
    if A.size == 0:
        return SvdFactors(np.zeros((n, 0)), np.zeros(0), np.zeros((d, 0)))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    k = int(np.count_nonzero(s > rank_threshold(s[0], A.shape, tol_factor))) if s[0] > 0 else 0
    return SvdFactors(U[:, :k], s[:k], Vt[:k].T)


def numerical_rank(A, tol_factor=RANK_TOL_FACTOR, scale=None):
    """Count singular values above the rank threshold.

    ``scale`` replaces ``sigma_max`` as the reference magnitude; pass the
    norm of a parent matrix when ``A`` is a residual that should be judged
    against it.
    """
    if tol_factor <= 0:
        raise ValueError("tol_factor must be positive")
    A = as_dense(A)
    if A.size == 0:
        return 0
    s = la.svdvals(A)
    ref = s[0] if scale is None else scale
    if ref <= 0:
        return 0
    return int(np.count_nonzero(s > rank_threshold(ref, A.shape, tol_factor)))


def exact_leverage_scores(A, tol_factor=RANK_TOL_FACTOR):
    """Squared row norms of the left singular factor of ``A``."""
    U = svd_thin(A, tol_factor).U
    return np.clip(np.einsum("ij,ij->i", U, U), 0.0, 1.0)


def qr_preconditioner(M, tol_factor=RANK_TOL_FACTOR):
    """Return ``(Q, R)`` with ``M @ R = Q``, ``Q`` orthonormal, ``R`` upper triangular.

    ``R`` is the inverse of the triangular QR factor of ``M``.
    """
    M = as_dense(M)
    p, d = M.shape
    if p < d:
        raise RankDeficientError(f"{p} rows < {d} columns")
    Q, T = la.qr(M, mode="economic")
    s = la.svdvals(T)
    if d and (s[0] == 0 or s[-1] <= rank_threshold(s[0], M.shape, tol_factor)):
        raise RankDeficientError("numerical rank below column count")
    R = la.solve_triangular(T, np.eye(d), lower=False)
    return Q, R


def rank_revealing_preconditioner(M, tol_factor=RANK_TOL_FACTOR):
    """SVD-based preconditioner for possibly rank-deficient ``M``.

    Returns ``(Q, R)`` with ``R`` of shape ``d x k`` such that ``M @ R = Q``
    has ``k = rank(M)`` orthonormal columns.
    """
    U, s, V = svd_thin(M, tol_factor)
    return U, V / s


def _operator(A):
    if isinstance(A, LinearOperator):
        return A
    if sp.issparse(A):
        return aslinearoperator(A)
    return aslinearoperator(np.asarray(A, dtype=np.float64))


def _power(op, x, steps):
    """Best ``||A x|| / ||x||`` over ``steps`` power iterations (a lower bound)."""
    best = 0.0
    for _ in range(max(1, steps)):
        nx = np.linalg.norm(x)
        if nx == 0:
            break
        y = op.matvec(x / nx)
        best = max(best, float(np.linalg.norm(y)))
        x = op.rmatvec(y)
    return best


def spectral_norm(A, tol=1e-6, max_iter=1000, seed=0):
    """Estimate of ``sigma_max(A)`` by seeded Lanczos (ARPACK).

    Works on dense, sparse or ``LinearOperator`` input.  The start vector
    comes from ``seed``, so the result is deterministic.  Returns a
    :class:`SpectralEstimate`; ``converged`` is False when ``max_iter``
    restarts ran out, in which case ``value`` is the best Ritz value seen.
    Plain power iteration stalls on the flat top spectra that reweighting
    produces, which is why a Krylov method is used.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _operator(A)
    n, d = op.shape
    if n == 0 or d == 0:
        return SpectralEstimate(0.0, True, 0)
    if min(n, d) < 3:
        # ARPACK needs k < min(n, d); a tiny operator is cheap to form
        M = op.matmat(np.eye(d))
        return SpectralEstimate(float(la.svdvals(M)[0]), True, 1)
    rng = _rng.derive_rng(seed, _rng.POWER)
    v0 = rng.standard_normal(min(n, d))
    if not np.any(op.matvec(rng.standard_normal(d))):
        # a random probe is annihilated only by the zero operator (almost surely)
        return SpectralEstimate(0.0, True, 1)
    try:
        s = svds(op, k=1, tol=0.1 * tol, v0=v0, maxiter=max_iter, return_singular_vectors=False)
    except ArpackNoConvergence as exc:
        vals = np.sqrt(np.abs(np.asarray(exc.eigenvalues, dtype=float)))
        best = float(vals.max()) if vals.size else 0.0
        return SpectralEstimate(max(best, _power(op, v0 if d <= n else op.rmatvec(v0), max_iter)),
                                False, max_iter)
    return SpectralEstimate(float(s[0]), True, max_iter)


def distortion(sketched_basis, tol_factor=RANK_TOL_FACTOR):
    """``sigma_max / sigma_min`` of ``G @ U``; ``inf`` when rank-deficient."""
    M = as_dense(sketched_basis)
    p, k = M.shape
    if k == 0:
        return 1.0
    if p < k:
        return float("inf")
    s = la.svdvals(M)
    if s[0] == 0 or s[-1] <= rank_threshold(s[0], M.shape, tol_factor):
        return float("inf")
    return float(s[0] / s[-1])


def pseudo_inverse_apply(M, v, tol_factor=RANK_TOL_FACTOR):
    """Minimum-norm least-squares solution of ``M x = v``."""
    M = as_dense(M)
    v = np.asarray(v, dtype=np.float64)
    if M.shape[0] != v.shape[0]:
        raise ShapeError(f"{M.shape} vs {v.shape}")
    U, s, V = svd_thin(M, tol_factor)
    coef = (U.T @ v) / (s if v.ndim == 1 else s[:, None])
    return V @ coef
