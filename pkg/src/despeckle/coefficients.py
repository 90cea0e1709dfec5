"""Diffusion coefficients of the three models and the edge source function."""
import numpy as np

from .grid import gaussian_convolve, gradient_magnitude_sq, laplacian, max_abs

__all__ = [
    "grayscale_indicator",
    "coeff_proposed",
    "coeff_tdfm",
    "coeff_hpcpde",
    "edge_h",
]


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def grayscale_indicator(I_xi, alpha):
    """``2|I_xi|^a / (|I_xi|^a + M^a)`` with ``M = max|I_xi|``; all zeros when ``M == 0``."""
    I_xi = np.asarray(I_xi, dtype=np.float64)
    m = max_abs(I_xi)
    if m == 0.0:
        return np.zeros_like(I_xi)
    # normalizing first keeps the powers in range and makes the map scale-free
    a = (np.abs(I_xi) / m) ** alpha
    return 2.0 * a / (a + 1.0)


def _edge_factor(u_xi, iota, beta):
    return 1.0 / (1.0 + iota * np.abs(u_xi) ** beta)


def coeff_proposed(I, u, p):
    """Composite coefficient: grayscale indicator times ``1 / (1 + iota |u_xi|^beta)``."""
    I = np.asarray(I, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    _check_pair(I, u)
    I_xi = gaussian_convolve(I, p.xi)
    u_xi = gaussian_convolve(u, p.xi)
    return grayscale_indicator(I_xi, p.alpha) * _edge_factor(u_xi, p.iota, p.beta)


def coeff_tdfm(I, p):
    """Grayscale indicator times ``1 / (1 + (|lap I_xi| / k)^beta)``; ``beta = 2`` is the original form."""
    I_xi = gaussian_convolve(np.asarray(I, dtype=np.float64), p.xi)
    lap = np.abs(laplacian(I_xi))
    return grayscale_indicator(I_xi, p.alpha) / (1.0 + (lap / p.k) ** p.beta)


def coeff_hpcpde(I, u, p):
    """``1 / ((1 + s^alpha)(1 + iota |u_xi|^beta))`` with ``s`` chosen by ``p.hpcpde_s``.

    ``s = |I_xi| / M_xi`` by default (0 when the image is all zero); the
    alternative ``s = |grad I_xi|`` is selected with ``hpcpde_s="gradient"``.
    """
    I = np.asarray(I, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    _check_pair(I, u)
    I_xi = gaussian_convolve(I, p.xi)
    u_xi = gaussian_convolve(u, p.xi)
    if p.hpcpde_s == "gradient":
        s = np.sqrt(gradient_magnitude_sq(I_xi))
    else:
        m = max_abs(I_xi)
        s = np.abs(I_xi) / m if m > 0 else np.zeros_like(I_xi)
    return 1.0 / (1.0 + s ** p.alpha) * _edge_factor(u_xi, p.iota, p.beta)


def edge_h(s, k_h=1.0, kind="rational"):
    """Bounded, Lipschitz edge source.

    ``rational``: ``s^2 / (s^2 + k_h^2)``, values in [0, 1).
    ``clip``: ``min(s / k_h, 1)``.
    """
    s = np.asarray(s, dtype=np.float64)
    if kind == "rational":
        s2 = s * s
        return s2 / (s2 + k_h * k_h)
    if kind == "clip":
        return np.minimum(s / k_h, 1.0)
    raise ValueError(f"unknown h kind {kind!r}")
