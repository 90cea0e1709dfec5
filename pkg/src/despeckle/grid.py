"""Stencil substrate: reflective boundaries, difference operators, smoothing.

A field is a 2D ``float64`` array of shape ``(height, width)`` with unit grid
spacing. Every boundary uses half-sample symmetric reflection, i.e. the ghost
cell beyond index ``0`` equals cell ``0`` (``f[-1] == f[0]``), which gives
zero normal derivatives for the field and for anything built from it.
"""
import math
from functools import lru_cache

import numpy as np
from scipy import ndimage, sparse

__all__ = [
    "as_field",
    "reflect_index",
    "laplacian",
    "gradient_magnitude_sq",
    "divergence_flux",
    "gaussian_kernel",
    "gaussian_convolve",
    "max_abs",
    "laplacian_matrix",
    "difference_matrices",
]


def as_field(f, name="field"):
    """Validate ``f`` as a field and return it as a float64 array (no copy if possible)."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ValueError(f"{name} must be at least 3x3, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def reflect_index(i, n):
    """Fold a signed index into ``[0, n)`` by half-sample reflection.

    ``-1 -> 0`` and ``n -> n - 1``; indices further out are folded again,
    so the function is total for any integer.
    """
    if n < 1:
        raise ValueError("axis length must be >= 1")
    m = i % (2 * n)
    return m if m < n else 2 * n - 1 - m


def _pad1(f):
    return np.pad(f, 1, mode="symmetric")


def laplacian(f):
    """Five-point Laplacian with reflective borders.

    Written as a sum of one-sided differences so that it coincides bit for
    bit with ``divergence_flux(1, f)``.
    """
    f = np.asarray(f, dtype=np.float64)
    p = _pad1(f)
    c = p[1:-1, 1:-1]
    dx = (p[1:-1, 2:] - c) - (c - p[1:-1, :-2])
    dy = (p[2:, 1:-1] - c) - (c - p[:-2, 1:-1])
    return dx + dy


def gradient_magnitude_sq(f):
    """Squared magnitude of the central-difference gradient."""
    f = np.asarray(f, dtype=np.float64)
    p = _pad1(f)
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return gx * gx + gy * gy


def divergence_flux(c, f):
    """Conservative ``div(c grad f)`` with arithmetic-mean half-point conductances.

    The flux through the outer boundary is zero, so the cell sum of the
    result vanishes up to rounding.
    """
    c = np.asarray(c, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    _same_shape(c, f)
    p = _pad1(f)
    q = _pad1(c)
    fc = p[1:-1, 1:-1]
    cc = q[1:-1, 1:-1]
    c_e = (cc + q[1:-1, 2:]) / 2.0
    c_w = (q[1:-1, :-2] + cc) / 2.0
    c_s = (cc + q[2:, 1:-1]) / 2.0
    c_n = (q[:-2, 1:-1] + cc) / 2.0
    dx = c_e * (p[1:-1, 2:] - fc) - c_w * (fc - p[1:-1, :-2])
    dy = c_s * (p[2:, 1:-1] - fc) - c_n * (fc - p[:-2, 1:-1])
    return dx + dy


@lru_cache(maxsize=32)
def gaussian_kernel(xi):
    """Normalized 1D Gaussian taps of width ``xi`` truncated at ``ceil(3 xi)``."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    radius = int(math.ceil(3.0 * xi))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / xi) ** 2)
    w /= w.sum()
    # exact symmetry regardless of summation rounding
    w = 0.5 * (w + w[::-1])
    w.setflags(write=False)
    return w


def gaussian_convolve(f, xi):
    """Separable Gaussian smoothing with reflective padding; ``xi == 0`` is the identity."""
    f = np.asarray(f, dtype=np.float64)
    if xi < 0:
        raise ValueError("xi must be >= 0")
    if xi == 0:
        return f.copy()
    w = gaussian_kernel(float(xi))
    out = ndimage.correlate1d(f, w, axis=0, mode="reflect")
    return ndimage.correlate1d(out, w, axis=1, mode="reflect")


def max_abs(f):
    return float(np.max(np.abs(f)))


def _reflect_second_difference(n):
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sparse.diags([off, main, off], [-1, 0, 1], format="csr")


@lru_cache(maxsize=8)
def laplacian_matrix(shape):
    """Sparse matrix of :func:`laplacian` acting on row-major flattened fields."""
    h, w = shape
    lap = sparse.kron(sparse.identity(h), _reflect_second_difference(w)) + sparse.kron(
        _reflect_second_difference(h), sparse.identity(w)
    )
    return lap.tocsr()


@lru_cache(maxsize=8)
def difference_matrices(shape):
    """Forward-difference matrices across horizontal and vertical cell faces.

    Returns ``(gx, gy, ax, ay)``: ``gx`` maps a flattened field to its
    differences across the ``h*(w-1)`` vertical faces, ``ax`` maps a field to
    the arithmetic mean of the two cells adjacent to each face; likewise for
    ``gy``/``ay`` on horizontal faces.
    """
    h, w = shape

    def one_axis(n):
        d = sparse.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
        a = sparse.diags([np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, 1], shape=(n - 1, n))
        return d, a

    dw, aw = one_axis(w)
    dh, ah = one_axis(h)
    eye_h, eye_w = sparse.identity(h), sparse.identity(w)
    gx = sparse.kron(eye_h, dw).tocsr()
    ax = sparse.kron(eye_h, aw).tocsr()
    gy = sparse.kron(dh, eye_w).tocsr()
    ay = sparse.kron(ah, eye_w).tocsr()
    return gx, gy, ax, ay
