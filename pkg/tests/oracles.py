"""Slow, independent reference implementations used only by the tests."""
import numpy as np


def naive_matmul(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, k = A.shape
    m = B.shape[1]
    C = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += A[i, t] * B[t, j]
            C[i, j] = s
    return C


def explicit_hadamard(L):
    H = np.ones((1, 1))
    while H.shape[0] < L:
        H = np.block([[H, H], [H, -H]])
    return H


def leverage_formula(A):
    """``a_i (A^T A)^{-1} a_i^T`` for full column rank ``A``."""
    G = np.linalg.inv(A.T @ A)
    return np.einsum("ij,jk,ik->i", A, G, A)


def capped_projection(v, cap):
    """Projection onto ``{sum = 1, 0 <= x <= cap}`` by sorting breakpoints."""
    lo, hi = v.min() - cap - 1, v.max() + 1
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0, cap).sum() > 1:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi), 0, cap)


def packing_pg_oracle(F, iters=3000):
    """Projected subgradient on ``lambda_max(F^T diag(w) F)`` over the capped simplex."""
    p = F.shape[0]
    cap = 2.0 / p
    w = np.full(p, 1.0 / p)

    def lmax(w):
        return np.linalg.eigvalsh((F.T * w) @ F)[-1]

    best = lmax(w)
    for t in range(1, iters + 1):
        _, V = np.linalg.eigh((F.T * w) @ F)
        g = (F @ V[:, -1]) ** 2
        g = g - g.mean()
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        w = capped_projection(w - 0.5 / (p * np.sqrt(t)) * g / gn, cap)
        best = min(best, lmax(w))
    return best
