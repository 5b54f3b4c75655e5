"""Row reweighting by a small packing SDP.

Given rows ``y_1..y_p`` lying in a ``k``-dimensional subspace we look for
weights ``w`` in ``W = {sum(w) = 1, 0 <= w_i <= 2/p}`` minimising
``lambda_max(sum_i w_i y_i y_i^T)``.  The solver runs accelerated
projected gradient on a log-sum-exp smoothing of ``lambda_max`` and keeps a
certified lower bound from the dual side, so the reported gap is honest.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisError, ShapeError
from .linalg import as_dense, spectral_norm

BOX_TOL = 1e-6
SUM_TOL = 1e-6


@dataclass(frozen=True)
class PackingInstance:
    """Projected rows ``y_i`` plus their coordinates in an orthonormal basis."""
    projected_rows: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        if self.projected_rows.shape[0] < 1:
            raise ValueError("packing instance needs p >= 1")
        if not np.all(np.isfinite(self.projected_rows)):
            raise ValueError("projected rows must be finite")

    @property
    def p(self):
        return self.projected_rows.shape[0]

    @property
    def cap(self):
        return 2.0 / self.p


@dataclass
class WeightVector:
    w: np.ndarray
    objective: float = float("nan")
    lower_bound: float = 0.0
    converged: bool = True
    iterations: int = 0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty vector")
        cap = 2.0 / w.size
        if np.any(w < 0) or np.any(w > cap * (1 + BOX_TOL)):
            raise ValueError("weights violate the box 0 <= w_i <= 2/p")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ValueError("weights must sum to 1")
        self.w = w

    @property
    def flags(self):
        return [] if self.converged else ["not-converged"]


def _project_gd(B, R, X, gamma, max_iter=10000):
    """Projection of the rows of ``X`` onto ``span(B)`` by preconditioned GD.

    Minimises ``||B R u - x||`` over ``u``; ``B R`` is well conditioned, so a
    handful of steps reach relative accuracy ``gamma``.
    """
    M = B @ R
    Xt = X.T
    L = spectral_norm(M, tol=1e-8).value ** 2
    if L == 0:
        return np.zeros_like(X)
    U = np.zeros((M.shape[1], X.shape[0]))
    grad = M.T @ (M @ U - Xt)
    g0 = max(np.linalg.norm(M.T @ Xt), 1e-300)
    for _ in range(max_iter):
        if np.linalg.norm(grad) <= gamma * g0:
            break
        U -= grad / L
        grad = M.T @ (M @ U - Xt)
    return (M @ U).T


def build_packing_instance(sampled_rows, basis_Q, R=None, B=None, method="exact", gamma=1e-8):
    """Project sampled sketch rows onto the span of ``basis_Q``.

    ``method="exact"`` uses ``Q Q^T``; ``method="gd"`` instead runs
    preconditioned gradient descent on ``B R`` (which spans the same space)
    to relative accuracy ``gamma``.
    """
    X = as_dense(sampled_rows)
    Q = as_dense(basis_Q)
    if X.ndim != 2 or Q.ndim != 2 or X.shape[1] != Q.shape[0]:
        raise ShapeError(f"rows {X.shape} vs basis {Q.shape}")
    k = Q.shape[1]
    if np.linalg.norm(Q.T @ Q - np.eye(k)) > 1e-8 * max(1, k):
        raise BasisError()
    if method == "exact":
        coords = X @ Q
        Y = coords @ Q.T
    elif method == "gd":
        if R is None or B is None:
            raise ValueError("method='gd' needs B and R")
        Y = _project_gd(as_dense(B), as_dense(R), X, gamma)
        coords = Y @ Q
    else:
        raise ValueError(f"unknown projection method {method!r}")
    return PackingInstance(Y, coords)


def _gram(F, w):
    return (F.T * w) @ F


def _lmax(F, w):
    if F.shape[1] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(_gram(F, w))[-1])


def capped_simplex_lmo(g, cap):
    """``argmin <g, s>`` over ``{sum(s) = 1, 0 <= s <= cap}``."""
    p = g.size
    order = np.argsort(g, kind="stable")
    s = np.zeros(p)
    full = min(int(np.floor(1.0 / cap + 1e-12)), p)
    s[order[:full]] = cap
    rest = 1.0 - full * cap
    if rest > 0 and full < p:
        s[order[full]] = rest
    return s


def _smooth(F, w, mu):
    """Log-sum-exp smoothing of ``lambda_max`` and its gradient in ``w``.

    ``lambda_max <= value <= lambda_max + mu log k``; the gradient is
    ``diag(F P F^T)`` for the softmax density ``P``, which is also the dual
    point used for the lower bound.
    """
    lam, V = np.linalg.eigh(_gram(F, w))
    z = (lam - lam[-1]) / mu
    e = np.exp(z)
    tot = e.sum()
    P = (V * (e / tot)) @ V.T
    grad = np.einsum("ij,jk,ik->i", F, P, F)
    return lam[-1] + mu * np.log(tot), grad, P, lam[-1]


def _dual_bound(F, P, cap):
    # for any density P: lambda_max(G(w)) >= <P, G(w)> >= min_{s in W} <diag(F P F^T), s>
    g = np.einsum("ij,jk,ik->i", F, P, F)
    return float(g @ capped_simplex_lmo(g, cap))


def solve_packing_sdp(inst, target_C=None, accuracy=0.05, max_iter=2000, seed=0,
                      stop_at_target=False):
    """Minimise ``lambda_max(sum w_i y_i y_i^T)`` over the weight set.

    Accelerated projected gradient on a log-sum-exp smoothing whose
    temperature is halved whenever progress stalls.  Stops once the best
    objective is within ``(1 + accuracy)`` of the certified lower bound or,
    with ``stop_at_target``, once it is at most ``(1 + accuracy) * target_C``.
    When ``max_iter`` runs out the best iterate is returned with
    ``converged=False``.  The trace holds the incumbent objective after each
    iteration and is therefore nonincreasing.  ``seed`` is accepted for
    interface symmetry; the method is deterministic.
    """
    if not 0 < accuracy < 1:
        raise ValueError("accuracy must lie in (0, 1)")
    if target_C is not None and target_C <= 0:
        raise ValueError("target_C must be positive")
    F = inst.coords
    p, k = F.shape
    cap = inst.cap
    w = np.full(p, 1.0 / p)
    best_w, ub = w, _lmax(F, w)
    trace = [ub]
    if ub == 0.0 or k == 0:
        return WeightVector(w, 0.0, 0.0, True, 0, trace)

    logk = np.log(k) if k > 1 else 1.0
    mu = accuracy * ub / (4 * logk)
    Pbar = np.zeros((k, k))
    npbar = 0
    lb = 0.0
    x = y = w
    t = 1.0
    L = 1.0 / (p * mu) * np.max(np.einsum("ij,ij->i", F, F)) ** 2 / max(ub, 1e-300)
    fx = _smooth(F, x, mu)[0]
    stall = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fy, gy, P, _ = _smooth(F, y, mu)
        npbar += 1
        Pbar += (P - Pbar) / npbar
        lb = max(lb, _dual_bound(F, P, cap), _dual_bound(F, Pbar, cap))
        while True:
            xn = project_capped_simplex(y - gy / L, cap)
            step = xn - y
            fxn, _, _, lam_xn = _smooth(F, xn, mu)
            if fxn <= fy + gy @ step + 0.5 * L * (step @ step) + 1e-12 * abs(fy) or L > 1e300:
                break
            L *= 2.0
        L *= 0.9
        if lam_xn < ub:
            ub, best_w = lam_xn, xn
        trace.append(ub)
        if ub <= (1 + accuracy) * lb:
            converged = True
            break
        if stop_at_target and target_C is not None and ub <= (1 + accuracy) * target_C:
            converged = True
            break
        if fxn > fx:
            # adaptive restart
            t, y = 1.0, x
            stall += 1
        else:
            stall = 0 if fx - fxn > 1e-9 * abs(fx) else stall + 1
            tn = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = xn + ((t - 1) / tn) * (xn - x)
            x, fx, t = xn, fxn, tn
        # the smoothing bias mu log k must stay well below the remaining gap
        if (stall >= 20 or mu * logk > 0.25 * (ub - lb)) and mu > 1e-12 * ub:
            mu = max(0.5 * mu, 1e-12 * ub)
            npbar = 0
            x = y = best_w
            t = 1.0
            fx = _smooth(F, x, mu)[0]
            stall = 0
    w = np.clip(best_w, 0.0, cap)
    w /= w.sum()
    return WeightVector(w, _lmax(F, w), lb, converged, it, trace)


def verify_weights(w, inst):
    """``lambda_max(sum w_i y_i y_i^T)`` recomputed by power iteration."""
    wv = w.w if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
    Y = inst.projected_rows
    if wv.shape[0] != Y.shape[0]:
        raise ShapeError(f"{wv.shape[0]} weights for {Y.shape[0]} rows")
    return spectral_norm(np.sqrt(wv)[:, None] * Y, tol=1e-6).value ** 2


def default_target(inst, drop_frac=0.01):
    """Twice ``lambda_max`` of uniform weights after dropping the heaviest rows."""
    F = inst.coords
    p = F.shape[0]
    norms = np.einsum("ij,ij->i", F, F)
    drop = int(np.floor(drop_frac * p))
    keep = np.argsort(norms, kind="stable")[: p - drop]
    w = np.zeros(p)
    w[keep] = 1.0 / keep.size
    return 2.0 * _lmax(F, w)


def project_capped_simplex(v, cap):
    """Euclidean projection onto ``{sum = 1, 0 <= x <= cap}`` by bisection on the shift."""
    lo, hi = v.min() - cap, v.max()
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        if np.clip(v - tau, 0, cap).sum() > 1:
            lo = tau
        else:
            hi = tau
    x = np.clip(v - 0.5 * (lo + hi), 0, cap)
    return x / x.sum()
