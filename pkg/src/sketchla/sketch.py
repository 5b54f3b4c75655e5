"""Seeded sketch operators applied by left multiplication.

All operators are immutable after construction and deterministic for a
fixed seed.  ``apply`` takes an ``in_dim x k`` dense or sparse matrix (or a
length-``in_dim`` vector) and returns the dense ``out_dim x k`` image.
"""
import numpy as np
import scipy.sparse as sp

from . import _rng
from .errors import LengthError, ShapeError, SparsityError


def next_pow2(n):
    return 1 << max(0, int(n) - 1).bit_length()


def fwht(v):
    """Unnormalised Walsh-Hadamard transform along axis 0.

    Computes ``H @ v`` for the Sylvester-ordered Hadamard matrix with
    ``H_1 = [1]`` and ``H_2L = [[H_L, H_L], [H_L, -H_L]]`` in
    ``log2(L)`` butterfly passes.  Trailing axes are transformed
    independently.
    """
    x = np.array(v, dtype=np.float64)
    L = x.shape[0]
    if L < 1 or L & (L - 1):
        raise LengthError(f"got {L}")
    rest = x.shape[1:]
    h = 1
    while h < L:
        y = x.reshape((L // (2 * h), 2, h) + rest)
        a = y[:, 0]
        b = y[:, 1]
        x = np.stack((a + b, a - b), axis=1).reshape((L,) + rest)
        h *= 2
    return x


class SketchOperator:
    kind = None
    in_dim = 0
    out_dim = 0
    seed = 0

    def apply(self, A):
        raise NotImplementedError

    def materialize(self):
        """Explicit ``out_dim x in_dim`` matrix (dense or CSR)."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.in_dim}->{self.out_dim}, seed={self.seed})"


def _as_matrix(A):
    if sp.issparse(A):
        return sp.csr_matrix(A, dtype=np.float64), False
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        return A[:, None], True
    return A, False


def _dense(A):
    return A.toarray() if sp.issparse(A) else A


class Osnap(SketchOperator):
    """Sparse embedding with exactly ``s`` nonzeros ``+-1/sqrt(s)`` per column.

    The rows hit by column ``j`` are ``s`` distinct indices drawn uniformly
    without replacement from a counter-based stream keyed by ``j``.
    """
    kind = "Osnap"

    def __init__(self, n, rows, s, seed, stream=_rng.OSNAP_S2):
        if rows < 1 or s < 1:
            raise ValueError("rows and s must be positive")
        if s > rows:
            raise SparsityError(f"s={s} > rows={rows}")
        self.in_dim, self.out_dim, self.s, self.seed = int(n), int(rows), int(s), int(seed)
        self.stream = stream
        cols = np.arange(self.in_dim, dtype=np.uint64)
        chosen = np.empty((self.in_dim, self.s), dtype=np.int64)
        for t in range(self.s):
            u = _rng.counter_uniform(seed, stream, cols, t)
            r = np.minimum((u * (self.out_dim - t)).astype(np.int64), self.out_dim - t - 1)
            # map r to the r-th row not already taken by this column
            for prev in np.sort(chosen[:, :t], axis=1).T:
                r += r >= prev
            chosen[:, t] = r
        # draws 0..s-1 pick rows, draws s..2s-1 pick signs
        signs = np.stack([np.where(_rng.counter_uniform(seed, stream, cols, self.s + t) < 0.5,
                                   -1.0, 1.0) for t in range(self.s)], axis=1)
        self.row_index = chosen
        self.values = signs / np.sqrt(self.s)
        indptr = np.arange(0, self.s * self.in_dim + 1, self.s)
        self._csc = sp.csc_matrix((self.values.ravel(), chosen.ravel(), indptr),
                                  shape=(self.out_dim, self.in_dim))
        self._csr = self._csc.tocsr()

    def materialize(self):
        return self._csr.copy()

    def apply(self, A):
        M, vec = _as_matrix(A)
        out = np.asarray(_dense(self._csr @ M))
        return out[:, 0] if vec else out


class StackedSrht(SketchOperator):
    """``m`` stacked randomised Hadamard blocks ``H D_b`` with Gaussian diagonals.

    Input of length ``ell`` is zero-padded to ``L = next_pow2(ell)``.  The
    output has ``m * L`` rows and is scaled by ``1/sqrt(m L)`` unless
    ``scaled=False`` is passed to :meth:`apply`.
    """
    kind = "StackedSrht"

    def __init__(self, ell, m, seed):
        if ell < 1 or m < 1:
            raise ValueError("ell and m must be positive")
        self.ell, self.m, self.seed = int(ell), int(m), int(seed)
        self.L = next_pow2(self.ell)
        self.in_dim = self.ell
        self.out_dim = self.m * self.L
        self.diagonals = _rng.derive_rng(seed, _rng.SRHT).standard_normal((self.m, self.L))
        self.scale = 1.0 / np.sqrt(self.m * self.L)

    def apply(self, A, scaled=True):
        M, vec = _as_matrix(A)
        M = _dense(M)
        k = M.shape[1]
        X = np.zeros((self.L, k))
        X[: self.ell] = M
        out = np.concatenate([fwht(D[:, None] * X) for D in self.diagonals], axis=0)
        if scaled:
            out *= self.scale
        return out[:, 0] if vec else out

    def rows(self, index, scaled=True):
        """Rows ``index`` of the explicit ``(m L) x ell`` matrix."""
        index = np.asarray(index, dtype=np.int64)
        block, j = np.divmod(index, self.L)
        E = np.zeros((self.L, index.size))
        E[j, np.arange(index.size)] = 1.0
        # H is symmetric, so column j of H is row j
        H_rows = fwht(E).T[:, : self.ell]
        out = H_rows * self.diagonals[block, : self.ell]
        return out * self.scale if scaled else out

    def materialize(self):
        return self.rows(np.arange(self.out_dim))


class UniformSample(SketchOperator):
    """``p`` i.i.d. elementary rows ``e_i^T`` with ``i`` uniform over the source."""
    kind = "UniformSample"
    replacement = True

    def __init__(self, source_rows, p, seed):
        if source_rows < 1 or p < 1:
            raise ValueError("source_rows and p must be positive")
        self.in_dim, self.out_dim, self.seed = int(source_rows), int(p), int(seed)
        self.indices = _rng.derive_rng(seed, _rng.UNIFORM).integers(0, self.in_dim, self.out_dim)

    def apply(self, A):
        M, vec = _as_matrix(A)
        out = np.asarray(_dense(M[self.indices]))
        return out[:, 0] if vec else out

    def materialize(self):
        return sp.csr_matrix((np.ones(self.out_dim), (np.arange(self.out_dim), self.indices)),
                             shape=(self.out_dim, self.in_dim))


class DiagonalWeights(SketchOperator):
    """Row scaling by ``weights``; with ``drop_zero`` zero-weight rows are removed."""
    kind = "DiagonalWeights"

    def __init__(self, weights, drop_zero=False, seed=0):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite vector")
        self.weights = w
        self.drop_zero = drop_zero
        self.keep = np.flatnonzero(w != 0) if drop_zero else np.arange(w.size)
        self.in_dim, self.out_dim, self.seed = w.size, self.keep.size, seed

    def apply(self, A):
        M, vec = _as_matrix(A)
        out = np.asarray(_dense(M))[self.keep] * self.weights[self.keep, None]
        return out[:, 0] if vec else out

    def materialize(self):
        return sp.csr_matrix((self.weights[self.keep], (np.arange(self.out_dim), self.keep)),
                             shape=(self.out_dim, self.in_dim))


class Composite(SketchOperator):
    """Operators applied in list order: ``ops[0]`` first, ``ops[-1]`` last."""
    kind = "Composite"

    def __init__(self, ops):
        ops = list(ops)
        if not ops:
            raise ValueError("Composite needs at least one operator")
        for a, b in zip(ops, ops[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"{a!r} feeds {b!r}")
        self.ops = ops
        self.in_dim, self.out_dim = ops[0].in_dim, ops[-1].out_dim
        self.seed = ops[0].seed

    def apply(self, A):
        out = A
        for op in self.ops:
            out = op.apply(out)
        return out

    def materialize(self):
        M = None
        for op in self.ops:
            E = op.materialize()
            M = E if M is None else E @ M
        return M.toarray() if sp.issparse(M) else np.asarray(M)


class IdentityOp(SketchOperator):
    kind = "Identity"

    def __init__(self, n):
        self.in_dim = self.out_dim = int(n)

    def apply(self, A):
        M, vec = _as_matrix(A)
        out = np.array(_dense(M), dtype=np.float64)
        return out[:, 0] if vec else out

    def materialize(self):
        return sp.identity(self.in_dim, format="csr")


def osnap_build(n, rows, s, seed, stream=_rng.OSNAP_S2):
    return Osnap(n, rows, s, seed, stream)


def srht_build(ell, m, seed):
    return StackedSrht(ell, m, seed)


def uniform_sample_build(source_rows, p, seed):
    return UniformSample(source_rows, p, seed)


def apply_sketch(op, A):
    """Apply ``op`` to ``A`` through its fast path."""
    if A.shape[0] != op.in_dim:
        raise ShapeError(f"operator expects {op.in_dim} rows, got {A.shape[0]}")
    return op.apply(A)
