"""Row-oriented matrix storage and the small kernels shared by every solver.

A :class:`RowMatrix` wraps either a dense row-major array or a CSR matrix and
caches the squared row norms and the squared Frobenius norm, which every
Kaczmarz-type update divides by.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "ContractError",
    "InconsistentSystemError",
    "RowMatrix",
    "IterState",
    "as_vector",
    "row_dot",
    "axpy_row",
    "lambda_min_pos",
    "lambda_max",
    "min_norm_solution",
    "block_ls_apply",
    "RANK_RTOL",
]

#: singular values (or pivoted-QR diagonals) below this fraction of the largest
#: are treated as zero when deciding numerical rank
RANK_RTOL = 1e-12


class ContractError(ValueError):
    """Raised when an input violates a documented precondition."""


class InconsistentSystemError(ValueError):
    """Raised when ``b`` is not (numerically) in the range of ``A``."""


def as_vector(values, length: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a finite float64 1-D array, checking its length."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ContractError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} contains NaN or Inf")
    return v


class RowMatrix:
    """Dense or CSR matrix with cached row norms.

    Parameters
    ----------
    data : array_like or scipy.sparse matrix
        The ``m x n`` coefficient matrix. Sparse input is converted to CSR
        with sorted, duplicate-free column indices and explicit zeros removed.

    Raises
    ------
    ContractError
        If the matrix is not two-dimensional, contains non-finite values or
        has a row without nonzero entries.
    """

    def __init__(self, data):
        if sp.issparse(data):
            csr = sp.csr_matrix(data, dtype=np.float64, copy=True)
            csr.sum_duplicates()
            csr.eliminate_zeros()
            csr.sort_indices()
            if not np.all(np.isfinite(csr.data)):
                raise ContractError("matrix contains NaN or Inf")
            self._csr = csr
            self._dense = None
            row_ids = np.repeat(np.arange(csr.shape[0]), np.diff(csr.indptr))
            sq = np.bincount(row_ids, weights=csr.data**2, minlength=csr.shape[0])
            self.m, self.n = csr.shape
        else:
            dense = np.array(data, dtype=np.float64, order="C", copy=True)
            if dense.ndim != 2:
                raise ContractError(f"matrix must be two-dimensional, got shape {dense.shape}")
            if not np.all(np.isfinite(dense)):
                raise ContractError("matrix contains NaN or Inf")
            self._dense = dense
            self._csr = None
            sq = np.einsum("ij,ij->i", dense, dense)
            self.m, self.n = dense.shape
        if self.m < 1 or self.n < 1:
            raise ContractError(f"matrix must be nonempty, got shape {(self.m, self.n)}")
        zero_rows = np.flatnonzero(sq == 0.0)
        if zero_rows.size:
            raise ContractError(
                f"matrix has {zero_rows.size} zero row(s), first at index {zero_rows[0]}"
            )
        self.row_sq_norms = sq
        self.row_sq_norms.setflags(write=False)
        self.frob_sq = float(np.sum(sq))

    @classmethod
    def from_csr(cls, indptr, indices, values, shape) -> "RowMatrix":
        """Build from raw CSR arrays, validating offsets and column indices."""
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        m, n = shape
        if indptr.shape != (m + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ContractError("malformed CSR row offsets")
        if np.any(np.diff(indptr) < 0):
            raise ContractError("CSR row offsets must be nondecreasing")
        if indices.size != values.size:
            raise ContractError("CSR indices and values differ in length")
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ContractError("CSR column index out of range")
        for i in range(m):
            cols = indices[indptr[i]:indptr[i + 1]]
            if cols.size > 1 and np.any(np.diff(cols) <= 0):
                raise ContractError(f"CSR column indices of row {i} are not strictly increasing")
        return cls(sp.csr_matrix((values, indices, indptr), shape=(m, n)))

    # -- storage access -------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def is_sparse(self) -> bool:
        return self._csr is not None

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz) if self.is_sparse else int(np.count_nonzero(self._dense))

    @property
    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            raise AttributeError("dense RowMatrix has no CSR storage")
        return self._csr

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            raise AttributeError("sparse RowMatrix has no dense storage")
        return self._dense

    @property
    def op(self):
        """The underlying ndarray or CSR matrix, for ``@`` products."""
        return self._csr if self._csr is not None else self._dense

    def toarray(self) -> np.ndarray:
        return self._csr.toarray() if self.is_sparse else self._dense.copy()

    def _check_row(self, i) -> int:
        if not (0 <= i < self.m):
            raise ContractError(f"row index {i} out of range [0, {self.m})")
        return int(i)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of the stored entries of row ``i``."""
        i = self._check_row(i)
        if self.is_sparse:
            lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
            return self._csr.indices[lo:hi], self._csr.data[lo:hi]
        return np.arange(self.n), self._dense[i]

    def row_dense(self, i: int) -> np.ndarray:
        i = self._check_row(i)
        if self.is_sparse:
            out = np.zeros(self.n)
            cols, vals = self.row(i)
            out[cols] = vals
            return out
        return self._dense[i].copy()

    def rows(self, idx) -> np.ndarray:
        """Dense copy of the submatrix made of rows ``idx``."""
        idx = np.asarray(idx, dtype=np.intp)
        if self.is_sparse:
            return self._csr[idx].toarray()
        return self._dense[idx]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.op @ x

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.op.T @ y

    def gram(self) -> np.ndarray:
        """The smaller of ``A^T A`` and ``A A^T`` as a dense symmetric array."""
        if self.is_sparse:
            g = (self._csr.T @ self._csr) if self.n <= self.m else (self._csr @ self._csr.T)
            return g.toarray()
        a = self._dense
        return a.T @ a if self.n <= self.m else a @ a.T

    def __repr__(self) -> str:
        kind = "csr" if self.is_sparse else "dense"
        return f"RowMatrix({self.m}x{self.n}, {kind}, nnz={self.nnz})"


@dataclass
class IterState:
    """Iterate ``x``, residual ``r = b - A x``, step counter and last selection."""

    x: np.ndarray
    r: np.ndarray
    k: int = 0
    last: object = None

    @classmethod
    def start(cls, A: RowMatrix, b, x0=None) -> "IterState":
        b = as_vector(b, A.m, "b")
        x = np.zeros(A.n) if x0 is None else as_vector(x0, A.n, "x0").copy()
        return cls(x=x, r=b - A.matvec(x))

    def copy(self) -> "IterState":
        return IterState(self.x.copy(), self.r.copy(), self.k, self.last)

    def residual_drift(self, A: RowMatrix, b) -> float:
        """``||r - (b - A x)||_inf``; zero for exact bookkeeping."""
        return float(np.max(np.abs(self.r - (np.asarray(b) - A.matvec(self.x)))))


def row_dot(A: RowMatrix, i: int, x) -> float:
    """``A[i] @ x`` touching only the stored entries of row ``i``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise ContractError(f"x has shape {x.shape}, expected ({A.n},)")
    cols, vals = A.row(i)
    if A.is_sparse:
        return float(vals @ x[cols])
    return float(vals @ x)


def axpy_row(x, alpha: float, A: RowMatrix, i: int) -> np.ndarray:
    """Return ``x + alpha * A[i]^T`` as a new array."""
    x = np.array(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise ContractError(f"x has shape {x.shape}, expected ({A.n},)")
    cols, vals = A.row(i)
    if A.is_sparse:
        x[cols] += alpha * vals
    else:
        x += alpha * vals
    return x


def lambda_min_pos(A: RowMatrix, rtol: float = 1e-10) -> float:
    """Smallest positive eigenvalue of ``A^T A``.

    Eigenvalues below ``rtol * lambda_max`` count as zero. ``A^T A`` and
    ``A A^T`` share their positive spectrum, so the smaller Gram matrix is
    decomposed.
    """
    ev = scipy.linalg.eigvalsh(A.gram())
    top = ev[-1]
    return float(ev[ev > rtol * top][0])


def lambda_max(M) -> float:
    """Largest eigenvalue of ``M^T M`` for a small dense block ``M``."""
    M = np.asarray(M, dtype=np.float64)
    g = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    return float(scipy.linalg.eigvalsh(g)[-1])


def min_norm_solution(A: RowMatrix, b, rtol: float = 1e-10) -> np.ndarray:
    """Least-Euclidean-norm solution ``A^+ b`` of a consistent system.

    Computed with an SVD-based least-squares solve (LAPACK ``gelsd``), which
    returns the minimum-norm minimiser and hence a vector in ``R(A^T)``.

    Raises
    ------
    InconsistentSystemError
        If ``||A x - b|| > rtol * ||b||`` for the least-squares solution.
    """
    b = as_vector(b, A.m, "b")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(A.n)
    x, *_ = scipy.linalg.lstsq(A.toarray(), b, cond=RANK_RTOL, lapack_driver="gelsd")
    res = np.linalg.norm(A.matvec(x) - b)
    if res > rtol * bnorm:
        raise InconsistentSystemError(
            f"system inconsistent: least-squares residual {res:.3e} exceeds {rtol:g}*||b||"
        )
    return x


def block_ls_apply(A: RowMatrix, idx, rhs) -> np.ndarray:
    """Minimum-norm least-squares solution ``z = A_idx^+ rhs``.

    Uses a column-pivoted QR of ``A_idx^T`` so the pseudoinverse is never
    formed. With ``A_idx^T P = Q R`` and numerical rank ``k`` the solution is
    ``z = Q[:, :k] y`` where ``y`` solves ``R[:k]^T y = P^T rhs`` in the
    least-squares sense.
    """
    idx = np.asarray(getattr(idx, "indices", idx), dtype=np.intp)
    if idx.size == 0:
        raise ContractError("block index set is empty")
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (idx.size,):
        raise ContractError(f"rhs has shape {rhs.shape}, expected ({idx.size},)")
    if idx.size == 1:
        cols, vals = A.row(int(idx[0]))
        z = np.zeros(A.n)
        z[cols] = vals * (rhs[0] / A.row_sq_norms[idx[0]])
        return z
    At = A.rows(idx).T
    Q, R, piv = scipy.linalg.qr(At, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > RANK_RTOL * diag[0]))
    c = rhs[piv]
    S = R[:rank].T
    if rank == idx.size:
        y = scipy.linalg.solve_triangular(S, c, lower=True, check_finite=False)
    else:
        y, *_ = scipy.linalg.lstsq(S, c, check_finite=False)
    return Q[:, :rank] @ y

