"""Matrix containers, norms and error metrics shared by every solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError

log = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 256
ROW_SUM_TOL = 1e-12


class SparseMatrix:
    """Column-major sparse nonnegative data matrix (features x examples).

    Entries are stored as a CSC matrix so a whole column ``X[:, k]`` is a
    contiguous slice. Per-row nonzero counts and l1 sums are computed once at
    construction. Instances are treated as immutable.
    """

    def __init__(self, csc):
        csc = sp.csc_matrix(csc, dtype=np.float64, copy=True)
        csc.sum_duplicates()
        csc.eliminate_zeros()
        csc.sort_indices()
        data = csc.data
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("matrix contains non-finite entries")
        if data.size and data.min() < 0:
            raise InvalidInputError("matrix contains negative entries")
        for arr in (csc.data, csc.indices, csc.indptr):
            arr.flags.writeable = False
        self._csc = csc
        self.row_nnz = np.bincount(csc.indices, minlength=csc.shape[0]).astype(np.int64)
        self.row_sums = np.asarray(csc.sum(axis=1)).ravel()
        self.row_nnz.flags.writeable = False
        self.row_sums.flags.writeable = False
        self._dense = None

    @classmethod
    def from_dense(cls, array):
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2:
            raise InvalidInputError(f"expected a 2-D array, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise InvalidInputError("matrix contains non-finite entries")
        return cls(sp.csc_matrix(array))

    @classmethod
    def from_coo(cls, rows, cols, values, shape):
        return cls(sp.coo_matrix((values, (rows, cols)), shape=shape))

    @property
    def shape(self):
        return self._csc.shape

    @property
    def n_rows(self):
        return self._csc.shape[0]

    @property
    def n_cols(self):
        return self._csc.shape[1]

    @property
    def nnz(self):
        return self._csc.nnz

    @property
    def indptr(self):
        return self._csc.indptr

    @property
    def indices(self):
        return self._csc.indices

    @property
    def data(self):
        return self._csc.data

    @property
    def csc(self):
        return self._csc

    def column(self, k):
        """Return ``(row_indices, values)`` of column ``k``."""
        a, b = self._csc.indptr[k], self._csc.indptr[k + 1]
        return self._csc.indices[a:b], self._csc.data[a:b]

    def to_dense(self):
        if self._dense is None:
            self._dense = self._csc.toarray()
            self._dense.flags.writeable = False
        return self._dense

    def rows(self, index):
        """Dense copy of the selected rows."""
        return np.array(self.to_dense()[np.asarray(index, dtype=np.int64)], dtype=np.float64)

    def zero_rows(self):
        return np.flatnonzero(self.row_nnz == 0)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix) or other.shape != self.shape:
            return NotImplemented
        a, b = self._csc, other._csc
        return (
            np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None

    def __repr__(self):
        f, n = self.shape
        return f"SparseMatrix(f={f}, n={n}, nnz={self.nnz})"


class LocalizingMatrix:
    """Dense f x f localizing matrix stored in contiguous row blocks.

    The backing array is C-ordered so each block of ``block_size`` rows is one
    contiguous slab; workers in the parallel SGD each own a set of blocks.
    """

    def __init__(self, values, block_size=DEFAULT_BLOCK_SIZE):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidInputError(f"localizing matrix must be square, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("localizing matrix has non-finite entries")
        if block_size < 1:
            raise InvalidInputError("block_size must be >= 1")
        self.values = values
        self.block_size = int(block_size)

    @classmethod
    def zeros(cls, order, block_size=DEFAULT_BLOCK_SIZE):
        return cls(np.zeros((order, order)), block_size)

    @property
    def order(self):
        return self.values.shape[0]

    def diag(self):
        return np.diag(self.values).copy()

    def trace(self):
        return float(np.trace(self.values))

    def blocks(self):
        """Yield ``(start, stop)`` row ranges of the storage blocks."""
        f = self.order
        for start in range(0, f, self.block_size):
            yield start, min(start + self.block_size, f)

    def copy(self):
        return LocalizingMatrix(self.values.copy(), self.block_size)

    def in_phi0(self, tol=1e-9):
        C = self.values
        d = np.diag(C)
        return bool(
            C.min(initial=0.0) >= -tol
            and d.max(initial=0.0) <= 1 + tol
            and np.all(C <= d[None, :] + tol)
        )

    def __repr__(self):
        return f"LocalizingMatrix(order={self.order}, block_size={self.block_size})"


@dataclass
class ErrorReport:
    inf_one_error: float
    rmse: float
    hott_recall: float | None = None
    wall_time: float = 0.0


@dataclass
class FactorizationResult:
    """Output of every factorization path: ``X ~ F @ W`` with ``W = X[hott]``."""

    hott: np.ndarray
    F: np.ndarray
    W: np.ndarray
    report: ErrorReport
    algorithm: str = ""
    status: str = "ok"
    diagnostics: list = field(default_factory=list)
    localizing: LocalizingMatrix | None = None

    @property
    def rank(self):
        return len(self.hott)


def _as_array(M):
    if isinstance(M, SparseMatrix):
        return M.csc
    return M


def inf_one_norm(M):
    """Largest absolute row sum: ``max_i sum_j |M_ij|``. Zero for empty input."""
    M = _as_array(M)
    if sp.issparse(M):
        data = M.data
        if not np.all(np.isfinite(data)):
            raise InvalidInputError("matrix contains non-finite entries")
        if M.shape[0] == 0 or M.shape[1] == 0:
            return 0.0
        sums = np.asarray(abs(M).sum(axis=1)).ravel()
        return float(sums.max(initial=0.0))
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    if M.size == 0:
        return 0.0
    if M.ndim == 1:
        M = M[None, :]
    return float(np.abs(M).sum(axis=1).max())


def l1_row_distance(A, i, j):
    """l1 distance between rows ``i`` and ``j`` of a dense or sparse matrix."""
    A = _as_array(A)
    f = A.shape[0]
    for idx in (i, j):
        if not -f <= idx < f:
            raise IndexError(f"row index {idx} out of range for {f} rows")
    if sp.issparse(A):
        A = sp.csr_matrix(A)
        diff = A.getrow(i) - A.getrow(j)
        return float(np.abs(diff.data).sum())
    A = np.asarray(A, dtype=np.float64)
    return float(np.abs(A[i] - A[j]).sum())


def pairwise_l1(A):
    """All-pairs l1 row distances of a dense matrix (f x f)."""
    A = np.asarray(A, dtype=np.float64)
    f = A.shape[0]
    D = np.zeros((f, f))
    for i in range(f):
        D[i, i + 1:] = np.abs(A[i + 1:] - A[i]).sum(axis=1)
    return D + D.T


def residual(X, F, W):
    X = X.to_dense() if isinstance(X, SparseMatrix) else np.asarray(X, dtype=np.float64)
    F = np.asarray(F, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if F.ndim != 2 or W.ndim != 2 or F.shape[1] != W.shape[0] or X.shape != (F.shape[0], W.shape[1]):
        raise InvalidInputError(
            f"shape mismatch: X{X.shape} vs F{F.shape} @ W{W.shape}"
        )
    return X - F @ W


def rmse(X, F, W):
    """Root-mean-square of the entries of ``X - F @ W``."""
    R = residual(X, F, W)
    if R.size == 0:
        return 0.0
    return float(np.sqrt(np.sum(R * R) / R.size))


def normalize_rows(X):
    """Scale every nonzero row to unit l1 sum; zero rows are left alone.

    Zero rows are logged as a warning and can be listed with
    ``X.zero_rows()`` on the result.
    """
    csc = X.csc
    sums = X.row_sums
    zero = sums == 0
    if zero.any():
        log.warning("normalize_rows: %d zero row(s) left unscaled: %s",
                    int(zero.sum()), np.flatnonzero(zero)[:20].tolist())
    scale = np.where(zero, 1.0, sums)
    data = csc.data / scale[csc.indices]
    # rows already within the unit-sum tolerance keep their bits (idempotence)
    keep = np.abs(sums[csc.indices] - 1.0) <= ROW_SUM_TOL
    data[keep] = csc.data[keep]
    out = sp.csc_matrix((data, csc.indices.copy(), csc.indptr.copy()), shape=csc.shape)
    return SparseMatrix(out)


def as_sparse(X):
    if isinstance(X, SparseMatrix):
        return X
    if sp.issparse(X):
        return SparseMatrix(X)
    return SparseMatrix.from_dense(X)
