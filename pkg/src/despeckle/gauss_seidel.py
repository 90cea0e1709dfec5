"""Lexicographic Gauss-Seidel for sparse systems assembled from grid stencils."""
from typing import NamedTuple

import numba as nb
import numpy as np
from scipy import sparse

__all__ = ["GSResult", "gauss_seidel"]


class GSResult(NamedTuple):
    x: np.ndarray
    residuals: np.ndarray  # infinity-norm residual after each sweep; empty if init was already a solution
    converged: bool

    @property
    def sweeps(self):
        return len(self.residuals)


@nb.njit(cache=True, nogil=True)
def _residual(indptr, indices, data, b, x):
    res = 0.0
    for i in range(b.shape[0]):
        r = b[i]
        for p in range(indptr[i], indptr[i + 1]):
            r -= data[p] * x[indices[p]]
        r = abs(r)
        # NaN must not hide behind the comparison
        if r > res or r != r:
            res = r
    return res


@nb.njit(cache=True, nogil=True)
def _sweeps(indptr, indices, data, b, x, tol, max_sweeps, trace):
    n = b.shape[0]
    # an initial guess that already satisfies the tolerance is returned untouched
    if _residual(indptr, indices, data, b, x) <= tol:
        return 0
    diag = np.zeros(n)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] += data[p]
    for s in range(max_sweeps):
        for i in range(n):
            acc = b[i]
            for p in range(indptr[i], indptr[i + 1]):
                acc -= data[p] * x[indices[p]]
            # the loop above also subtracted the diagonal term
            x[i] = x[i] + acc / diag[i]
        res = _residual(indptr, indices, data, b, x)
        trace[s] = res
        if res <= tol:
            return s + 1
    return max_sweeps


def gauss_seidel(A, rhs, init=None, tol=1e-6, max_sweeps=200):
    """Solve ``A x = rhs`` by in-place Gauss-Seidel sweeps in row order.

    ``A`` is a square sparse matrix (any scipy format) acting on row-major
    flattened fields; ``rhs`` and ``init`` may be fields or vectors and the
    solution comes back in the shape of ``rhs``. Iteration stops once
    ``max|rhs - A x| <= tol * (1 + max|rhs|)`` or after ``max_sweeps``.

    Raises ``ValueError`` when a diagonal entry is not strictly positive.
    """
    A = sparse.csr_matrix(A)
    A.sum_duplicates()
    rhs = np.asarray(rhs, dtype=np.float64)
    b = np.ascontiguousarray(rhs.ravel())
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"operator shape {A.shape} does not match rhs of size {n}")
    if not np.all(A.diagonal() > 0):
        raise ValueError("Gauss-Seidel needs a strictly positive diagonal")
    if init is None:
        x = np.zeros(n)
    else:
        x = np.array(np.asarray(init, dtype=np.float64).ravel(), copy=True)
    abs_tol = tol * (1.0 + (np.max(np.abs(b)) if n else 0.0))
    trace = np.empty(max_sweeps)
    used = _sweeps(A.indptr, A.indices, A.data, b, x, abs_tol, max_sweeps, trace)
    res = trace[:used].copy()
    converged = used == 0 or bool(res[-1] <= abs_tol)
    return GSResult(x.reshape(rhs.shape), res, converged)
