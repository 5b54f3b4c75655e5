"""Sketched least squares with a preconditioned gradient-descent finish."""
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import _rng
from .embed import EmbedConfig, constant_embed
from .leverage import LevSampleConfig, eps_subspace_embed
from .linalg import as_dense, distortion, pseudo_inverse_apply, qr_preconditioner, spectral_norm
from .report import RunReport


@dataclass
class RegressionResult:
    y: np.ndarray
    residual: float
    iterations: int
    warm_start_residual: float
    oracle_ratio: float = None
    kappa: float = None
    trace: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    report: RunReport = None


@dataclass
class GdResult:
    x: np.ndarray
    iterations: int
    trace: list
    converged: bool


def exact_lsq_oracle(A, b):
    """Minimum-norm least-squares solution and its residual, via the SVD."""
    A = as_dense(A)
    b = np.asarray(b, dtype=np.float64)
    x = pseudo_inverse_apply(A, b)
    return x, float(np.linalg.norm(A @ x - b))


def gd_lsq(M, c, x0, eps, cap=None, c_it=4.0, kappa=None, window=5):
    """Gradient descent on ``||M x - c||^2`` with step ``1 / lambda_max(M^T M)``.

    Stops when the objective improved by less than ``eps/10`` (relative)
    over the last ``window`` steps, or after
    ``ceil(c_it * kappa^2 * log(1/eps))`` steps; ``kappa`` defaults to the
    condition number of ``M``.  The trace holds the objective at every
    iterate and never increases.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    M = as_dense(M)
    c = np.asarray(c, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    if kappa is None:
        kappa = distortion(M)
    if not np.isfinite(kappa):
        raise ValueError("M must have full column rank")
    if cap is None:
        cap = int(math.ceil(c_it * kappa ** 2 * math.log(1.0 / eps)))
    L = spectral_norm(M, tol=1e-8).value ** 2
    r = M @ x - c
    f = float(r @ r)
    trace = [f]
    if L == 0:
        return GdResult(x, 0, trace, True)
    eta = 1.0 / (L * (1 + 1e-6))
    g = M.T @ r
    gscale = max(np.linalg.norm(M.T @ c), np.finfo(float).tiny)
    if np.linalg.norm(g) <= 1e-12 * gscale:
        return GdResult(x, 0, trace, True)
    converged = False
    it = 0
    for it in range(1, cap + 1):
        xn = x - eta * g
        rn = M @ xn - c
        fn = float(rn @ rn)
        if fn > f:
            # only possible through rounding; keep the better iterate
            trace.append(f)
            converged = True
            break
        x, r, f = xn, rn, fn
        trace.append(f)
        g = M.T @ r
        if len(trace) > window and trace[-1 - window] - f <= (eps / 10) * f:
            converged = True
            break
    return GdResult(x, it, trace, converged)


def solve_regression(A, b, eps=0.1, alpha=0.25, seed=0, oracle=False, c_s=8.0, timing=True):
    """Approximate ``argmin_x ||A x - b||``.

    Sketches ``[A b]`` with a ``(1 +- sqrt(eps))`` leverage-score embedding,
    preconditions with ``R`` from a QR of a constant-factor embedding of
    ``A``, warm starts from the embedded problem and finishes with gradient
    descent in the preconditioned variable.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=np.float64).ravel()
    n, d = A.shape
    if b.shape[0] != n:
        raise ValueError(f"rhs has {b.shape[0]} entries for {n} rows")
    Ad = as_dense(A)
    Ab = sp.hstack([A, b[:, None]]).tocsr() if sp.issparse(A) else np.column_stack([Ad, b])

    lcfg = LevSampleConfig(epsilon=math.sqrt(eps), alpha=alpha, c_s=c_s,
                           seed=_rng.derive_seed(seed, _rng.REGRESSION, 1))
    SAb, smp, lrep = eps_subspace_embed(Ab, lcfg, timing=False)
    SA, Sb = SAb[:, :d], SAb[:, d]

    emb = constant_embed(A, EmbedConfig(alpha=alpha, seed=_rng.derive_seed(seed, _rng.REGRESSION, 2)),
                         timing=False)
    GA = emb.sketched
    Gb = emb.operator.apply(b)
    _, R = qr_preconditioner(GA)
    w0 = pseudo_inverse_apply(GA, Gb)
    y0 = la.solve_triangular(R, w0, lower=False)

    M = SA @ R
    kappa = distortion(M)
    gd = gd_lsq(M, Sb, y0, eps, kappa=kappa)
    x = R @ gd.x
    warm = float(np.linalg.norm(Ad @ w0 - b))
    res = float(np.linalg.norm(Ad @ x - b))
    flags = [] if gd.converged else ["not-converged"]
    flags += emb.report.flags
    if res > warm:
        x, res = w0, warm
        flags.append("warm-start-kept")

    rep = RunReport("regress", seed=seed,
                    params={"epsilon": eps, "alpha": alpha, "c_s": c_s},
                    rows_in=n, cols_in=d, rows_out=SA.shape[0])
    rep.metrics.update({"residual": res, "warm_start_residual": warm, "kappa_SAR": kappa,
                        "iterations": gd.iterations, "embedding_distortion":
                        emb.report.metrics["distortion"],
                        "sample_deviation": lrep.metrics["singular_deviation"]})
    ratio = None
    if oracle:
        _, opt = exact_lsq_oracle(Ad, b)
        ratio = res / opt if opt > 0 else (1.0 if res == 0 else float("inf"))
        rep.metrics["opt_residual"] = opt
        rep.metrics["oracle_ratio"] = ratio
        rep.passed = ratio <= 1 + eps
    for f in flags:
        rep.flag(f)
    rep.runtime_ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return RegressionResult(x, res, gd.iterations, warm, ratio, kappa, gd.trace, flags, rep)
