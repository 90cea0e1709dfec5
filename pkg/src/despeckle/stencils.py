"""Direct CSR assembly of the implicit-step operators.

Rows and columns index row-major flattened fields. Both builders return
``a * Id + b * K`` where ``K`` is

* ``lap diag(c) lap`` (fourth-order models, up to 13 entries per row), or
* ``-div(c grad .)`` with arithmetic-mean face conductances (5 entries),

using the same half-sample reflective boundary as :mod:`despeckle.grid`.
Columns within a row come out sorted.
"""
import numba as nb
import numpy as np
from scipy import sparse

__all__ = ["fourth_order_system", "flux_system"]

_DIRS = np.array([[-1, 0], [0, -1], [0, 1], [1, 0]], dtype=np.int64)


@nb.njit(cache=True)
def _degree(h, w, dirs):
    deg = np.zeros((h, w), dtype=np.int64)
    for r in range(h):
        for s in range(w):
            for d in range(4):
                qr, qs = r + dirs[d, 0], s + dirs[d, 1]
                if 0 <= qr < h and 0 <= qs < w:
                    deg[r, s] += 1
    return deg


@nb.njit(cache=True)
def _fourth(c, a, b, dirs):
    h, w = c.shape
    n = h * w
    deg = _degree(h, w, dirs)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = np.empty(13 * n, dtype=np.int64)
    data = np.empty(13 * n, dtype=np.float64)
    acc = np.zeros((5, 5))
    used = np.zeros((5, 5), dtype=np.bool_)
    nnz = 0
    for r in range(h):
        for s in range(w):
            for i in range(5):
                for j in range(5):
                    acc[i, j] = 0.0
                    used[i, j] = False
            # lap row p: -deg(p) on p, +1 on each in-grid neighbour k;
            # lap row k: -deg(k) on k, +1 on each in-grid neighbour q
            for kk in range(5):
                if kk == 4:
                    kr, ks = r, s
                    weight = -deg[r, s] * c[kr, ks]
                else:
                    kr, ks = r + dirs[kk, 0], s + dirs[kk, 1]
                    if kr < 0 or kr >= h or ks < 0 or ks >= w:
                        continue
                    weight = c[kr, ks]
                for d in range(4):
                    qr, qs = kr + dirs[d, 0], ks + dirs[d, 1]
                    if 0 <= qr < h and 0 <= qs < w:
                        i, j = qr - r + 2, qs - s + 2
                        acc[i, j] += weight
                        used[i, j] = True
                i, j = kr - r + 2, ks - s + 2
                acc[i, j] -= weight * deg[kr, ks]
                used[i, j] = True
            for i in range(5):
                for j in range(5):
                    if used[i, j]:
                        indices[nnz] = (r + i - 2) * w + (s + j - 2)
                        if i == 2 and j == 2:
                            data[nnz] = a + b * acc[i, j]
                        else:
                            data[nnz] = b * acc[i, j]
                        nnz += 1
            indptr[r * w + s + 1] = nnz
    return indptr, indices[:nnz].copy(), data[:nnz].copy()


@nb.njit(cache=True)
def _flux(c, a, b, dirs):
    h, w = c.shape
    n = h * w
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = np.empty(5 * n, dtype=np.int64)
    data = np.empty(5 * n, dtype=np.float64)
    nnz = 0
    for r in range(h):
        for s in range(w):
            diag = 0.0
            start = nnz
            for d in range(4):
                qr, qs = r + dirs[d, 0], s + dirs[d, 1]
                if 0 <= qr < h and 0 <= qs < w:
                    face = 0.5 * (c[r, s] + c[qr, qs])
                    diag += face
                    if d == 2:
                        # diagonal slot goes between west and east neighbours
                        indices[nnz] = r * w + s
                        nnz += 1
                    indices[nnz] = qr * w + qs
                    data[nnz] = -b * face
                    nnz += 1
                elif d == 2:
                    indices[nnz] = r * w + s
                    nnz += 1
            for p in range(start, nnz):
                if indices[p] == r * w + s:
                    data[p] = a + b * diag
            indptr[r * w + s + 1] = nnz
    return indptr, indices[:nnz].copy(), data[:nnz].copy()


def _csr(parts, n):
    indptr, indices, data = parts
    return sparse.csr_matrix((data, indices, indptr), shape=(n, n))


def fourth_order_system(c, a=0.0, b=1.0):
    """``a * Id + b * lap diag(c) lap`` as CSR."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    return _csr(_fourth(c, float(a), float(b), _DIRS), c.size)


def flux_system(c, a=0.0, b=1.0):
    """``a * Id - b * div(c grad .)`` as CSR."""
    c = np.ascontiguousarray(c, dtype=np.float64)
    return _csr(_flux(c, float(a), float(b), _DIRS), c.size)
