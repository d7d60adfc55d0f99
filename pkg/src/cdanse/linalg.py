"""Triplet assembly into compressed-row storage and a sparse LU factor/solve wrapper.

Row-compressed matrices are plain :class:`scipy.sparse.csr_matrix` objects with
sorted, duplicate-free column indices. Factorization is delegated to SuperLU
with an explicit pivot check on top.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a pivot is zero or negligible relative to its column."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class TripletPattern:
    """Fixed (row, col) triplet layout with a precomputed scatter into CSR.

    Assembling many matrices that share one sparsity layout (the convection
    matrix at every nonlinear iteration, say) then costs a single ``bincount``.
    """

    def __init__(self, shape, rows, cols):
        nrow, ncol = (shape, shape) if np.isscalar(shape) else shape
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have the same length")
        if rows.size and (rows.min() < 0 or rows.max() >= nrow or cols.min() < 0 or cols.max() >= ncol):
            raise IndexError(f"triplet index out of range for a {nrow}x{ncol} matrix")
        self.shape = (int(nrow), int(ncol))
        keys = rows * ncol + cols
        uniq, self._scatter = np.unique(keys, return_inverse=True)
        self._scatter = self._scatter.ravel()
        self.indices = (uniq % ncol).astype(np.int32)
        counts = np.bincount(uniq // ncol, minlength=nrow)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
        self.nnz = len(uniq)
        self.n_triplets = rows.size

    def assemble(self, values) -> sp.csr_matrix:
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.n_triplets:
            raise ValueError(f"expected {self.n_triplets} values, got {values.size}")
        data = np.bincount(self._scatter, weights=values, minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def from_arrays(shape, rows, cols, values) -> sp.csr_matrix:
    """CSR matrix from parallel triplet arrays; duplicate entries are summed."""
    return TripletPattern(shape, rows, cols).assemble(values)


def from_triplets(dim: int, entries) -> sp.csr_matrix:
    """CSR matrix of size dim x dim from an iterable of ``(row, col, value)``."""
    entries = list(entries)
    if not entries:
        return sp.csr_matrix((dim, dim))
    r, c, v = zip(*entries)
    return from_arrays(dim, np.asarray(r), np.asarray(c), np.asarray(v, dtype=float))


def is_canonical_csr(A) -> bool:
    """Check offsets are monotone and column indices strictly increase within rows."""
    A = sp.csr_matrix(A)
    if np.any(np.diff(A.indptr) < 0):
        return False
    for i in range(A.shape[0]):
        cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
        if np.any(np.diff(cols) <= 0):
            return False
    return True


def _locate_zero_pivot(A, kwargs):
    """Elimination step of the vanishing pivot, found by refactoring with a tiny diagonal shift."""
    shift = 1e-10 * max(abs(A).max(), 1.0)
    try:
        lu = spla.splu((A + shift * sp.identity(A.shape[0], format="csc")).tocsc(), **kwargs)
    except RuntimeError:
        return None
    return int(np.argmin(np.abs(lu.U.diagonal())))


class Factorization:
    """LU factors of a square sparse matrix; reusable for any number of right-hand sides.

    Without ``perm`` SuperLU orders columns with COLAMD and uses classical
    partial pivoting. With a symmetric fill-reducing permutation ``perm`` the
    matrix is factored as ``A[perm][:, perm]`` in that order, using threshold
    partial pivoting (``pivot_threshold``) so rows stay near the diagonal.
    """

    def __init__(self, matrix, perm=None, pivot_threshold=None, pivot_rtol: float = PIVOT_RTOL):
        A = sp.csc_matrix(matrix, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got shape {A.shape}")
        self.shape = A.shape
        self.perm = None
        if perm is not None:
            perm = np.asarray(perm, dtype=np.int64)
            if perm.shape != (A.shape[0],):
                raise ValueError("permutation length does not match the matrix")
            self.perm = perm
            A = A[perm][:, perm].tocsc()
        colmax = np.asarray(abs(A).max(axis=0).todense()).ravel()
        zero_cols = np.flatnonzero(colmax == 0.0)
        if zero_cols.size:
            col = int(zero_cols[0] if perm is None else perm[zero_cols[0]])
            raise SingularMatrixError(f"column {col} is identically zero", pivot=col)
        if perm is None:
            thr = 1.0 if pivot_threshold is None else pivot_threshold
            kwargs = dict(permc_spec="COLAMD", diag_pivot_thresh=thr)
        else:
            thr = 1e-3 if pivot_threshold is None else pivot_threshold
            kwargs = dict(permc_spec="NATURAL", diag_pivot_thresh=thr)
        try:
            self._lu = spla.splu(A, **kwargs)
        except RuntimeError as exc:  # SuperLU: "Factor is exactly singular"
            raise SingularMatrixError(str(exc), pivot=_locate_zero_pivot(A, kwargs)) from exc
        # Pr A Pc = L U with Pc[i, perm_c[i]] = 1, so U[k, k] comes from column argsort(perm_c)[k]
        udiag = np.abs(self._lu.U.diagonal())
        cols = np.argsort(self._lu.perm_c)
        small = udiag <= pivot_rtol * colmax[cols]
        if np.any(small):
            k = int(np.flatnonzero(small)[0])
            col = int(cols[k] if perm is None else perm[cols[k]])
            raise SingularMatrixError(f"negligible pivot {udiag[k]:.3e} at elimination step {k} (column {col})", pivot=k)

    @property
    def nnz(self) -> int:
        return self._lu.L.nnz + self._lu.U.nnz

    def solve(self, rhs) -> np.ndarray:
        b = np.asarray(rhs, dtype=float)
        if self.perm is None:
            return self._lu.solve(b)
        x = np.empty_like(b)
        x[self.perm] = self._lu.solve(b[self.perm])
        return x


def lu_solve(matrix, rhs) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` with a fresh sparse LU factorization."""
    return Factorization(matrix).solve(rhs)


def relative_residual(matrix, x, rhs) -> float:
    """||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)."""
    A = sp.csr_matrix(matrix)
    r = A @ x - rhs
    anorm = abs(A).sum(axis=1).max()
    denom = anorm * np.abs(x).max() + np.abs(rhs).max()
    return float(np.abs(r).max() / denom) if denom > 0 else float(np.abs(r).max())
