"""Linear-algebra kernels: sparse direct solves, thin SVD, small dense solves.

Sparse operators are ``scipy.sparse.csr_matrix`` instances (compressed row
storage: ``indptr``, ``indices``, ``data``). Dense matrices are plain
``numpy.ndarray``.
"""

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, DimensionMismatch, SingularMatrix

__all__ = [
    "SvdResult",
    "SparseLU",
    "as_csr",
    "sparse_solve",
    "thin_svd",
    "dense_solve",
]

SPARSE_RTOL = 1e-10
DENSE_RTOL = 1e-12


def as_csr(A):
    """Return ``A`` as canonical CSR (sorted, duplicate-free column indices)."""
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    return A


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


class SparseLU:
    """LU factorization with partial pivoting of a square sparse matrix.

    Wraps SuperLU. The factorization is reused across right-hand sides;
    each solve is followed by up to two steps of iterative refinement when
    the relative residual exceeds ``rtol``.
    """

    def __init__(self, A, rtol=SPARSE_RTOL):
        A = sp.csc_matrix(A, dtype=np.float64)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {A.shape}")
        self.A = A
        self.rtol = rtol
        try:
            self._lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        except RuntimeError as exc:
            raise SingularMatrix(str(exc)) from exc

    @property
    def shape(self):
        return self.A.shape

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.A.shape[0]:
            raise DimensionMismatch(
                f"rhs length {b.shape[0]} does not match matrix size {self.A.shape[0]}"
            )
        if not np.any(b):
            return np.zeros_like(b)
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularMatrix("non-finite solution; matrix is numerically singular")
        for _ in range(2):
            if b.ndim == 1 and _relres(self.A, x, b) <= self.rtol:
                break
            x = x + self._lu.solve(b - self.A @ x)
        return x


def sparse_solve(A, b):
    """Solve ``A x = b`` for square sparse ``A`` by sparse LU.

    Returns ``x`` with ``||Ax - b|| / ||b|| <= 1e-10`` in the well-conditioned
    case. A zero right-hand side returns the zero vector without factoring.

    Raises
    ------
    SingularMatrix
        If the factorization hits an exactly zero pivot or produces
        non-finite values.
    """
    b = np.asarray(b, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch("rhs length does not match matrix")
    if not np.any(b):
        return np.zeros_like(b)
    return SparseLU(A).solve(b)


class SvdResult(NamedTuple):
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray


def thin_svd(X):
    """Economy SVD ``X = U diag(s) V^T`` with descending singular values.

    At most ``min(nrows, ncols)`` columns are returned. ``V`` holds the right
    singular vectors as columns.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2D array, got shape {X.shape}")
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SvdResult(U, s, Vt.T)


def dense_solve(A, b):
    """Solve a small dense square system by LU with partial pivoting."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch("rhs length does not match matrix")
    if A.shape[0] == 0:
        return np.zeros(0)
    try:
        with warnings.catch_warnings():
            # exact zero pivots are reported below as SingularMatrix
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularMatrix(str(exc)) from exc
    d = np.abs(np.diag(lu))
    if d.min() <= np.finfo(float).eps * max(d.max(), 1.0) * A.shape[0]:
        raise SingularMatrix("zero pivot in dense LU")
    x = sla.lu_solve((lu, piv), b)
    if _relres(A, x, b) > DENSE_RTOL:
        x = x + sla.lu_solve((lu, piv), b - A @ x)
    return x
