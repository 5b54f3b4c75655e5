"""Matrix Market reading and writing (real, general matrices only).

Coordinate files come back as canonical CSR with duplicates summed; array
files come back dense.  Parse errors carry the 1-based line number.
"""
import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError

BANNER = "%%matrixmarket"


def _data_lines(lines, start):
    for no, raw in enumerate(lines[start:], start + 1):
        s = raw.strip()
        if not s or s.startswith("%"):
            continue
        yield no, s.split()


def _int(tok, no):
    try:
        return int(tok)
    except ValueError:
        raise MatrixMarketError(f"expected an integer, got {tok!r}", no) from None


def _float(tok, no):
    try:
        v = float(tok)
    except ValueError:
        raise MatrixMarketError(f"expected a real value, got {tok!r}", no) from None
    if not np.isfinite(v):
        raise MatrixMarketError(f"non-finite value {tok!r}", no)
    return v


def parse_matrix_market(text):
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != BANNER or head[1].lower() != "matrix":
        raise MatrixMarketError("malformed header", 1)
    fmt, field, sym = (h.lower() for h in head[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unknown format {fmt!r}", 1)
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"unsupported field {field!r}; only real matrices", 1)
    if sym != "general":
        raise MatrixMarketError(f"unsupported symmetry {sym!r}; only general", 1)

    body = _data_lines(lines, 1)
    try:
        no, size = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None

    if fmt == "coordinate":
        if len(size) != 3:
            raise MatrixMarketError("size line needs rows cols nnz", no)
        n, d, nnz = (_int(t, no) for t in size)
        if min(n, d, nnz) < 0:
            raise MatrixMarketError("negative size", no)
        ri = np.empty(nnz, dtype=np.int64)
        ci = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz)
        k = 0
        for no, tok in body:
            if k == nnz:
                raise MatrixMarketError("more entries than declared", no)
            if len(tok) != 3:
                raise MatrixMarketError("entry needs row col value", no)
            i, j = _int(tok[0], no), _int(tok[1], no)
            if not (1 <= i <= n and 1 <= j <= d):
                raise MatrixMarketError(f"index ({i}, {j}) out of range", no)
            ri[k], ci[k], vals[k] = i - 1, j - 1, _float(tok[2], no)
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {k}", len(lines))
        A = sp.csr_matrix((vals, (ri, ci)), shape=(n, d))
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        return A

    if len(size) != 2:
        raise MatrixMarketError("size line needs rows cols", no)
    n, d = (_int(t, no) for t in size)
    if min(n, d) < 0:
        raise MatrixMarketError("negative size", no)
    vals = []
    for no, tok in body:
        if len(tok) != 1:
            raise MatrixMarketError("array entries take one value per line", no)
        if len(vals) == n * d:
            raise MatrixMarketError("more entries than declared", no)
        vals.append(_float(tok[0], no))
    if len(vals) != n * d:
        raise MatrixMarketError(f"expected {n * d} entries, found {len(vals)}", len(lines))
    # array format is column-major
    return np.asarray(vals, dtype=np.float64).reshape((d, n)).T.copy()


def read_matrix_market(path):
    with open(path, encoding="ascii") as fh:
        return parse_matrix_market(fh.read())


def format_matrix_market(A):
    out = []
    if sp.issparse(A):
        C = sp.coo_matrix(A)
        C.sum_duplicates()
        order = np.lexsort((C.row, C.col))
        out.append("%%MatrixMarket matrix coordinate real general")
        out.append(f"{C.shape[0]} {C.shape[1]} {C.nnz}")
        out += [f"{i + 1} {j + 1} {v!r}" for i, j, v in
                zip(C.row[order].tolist(), C.col[order].tolist(), C.data[order].tolist())]
    else:
        A = np.asarray(A, dtype=np.float64)
        if A.ndim == 1:
            A = A[:, None]
        out.append("%%MatrixMarket matrix array real general")
        out.append(f"{A.shape[0]} {A.shape[1]}")
        out += [repr(v) for v in A.T.ravel().tolist()]
    return "\n".join(out) + "\n"


def write_matrix_market(path, A):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_matrix_market(A))
