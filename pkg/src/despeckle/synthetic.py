"""Deterministic test scenes: piecewise-constant phantoms and a SAR-like scene."""
import numpy as np

from .grid import gaussian_convolve

__all__ = ["piecewise_constant", "sar_scene"]


def piecewise_constant(size=128, levels=(40.0, 120.0, 200.0)):
    """Background, a square and a disc, each at its own constant level."""
    lo, mid, hi = (float(v) for v in levels)
    img = np.full((size, size), lo)
    q = size // 4
    img[q:size - q, q:size // 2 + q // 2] = mid
    yy, xx = np.mgrid[0:size, 0:size]
    cy, cx, r = 0.6 * size, 0.6 * size, 0.2 * size
    img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = hi
    return img


def sar_scene(size=128):
    """Smooth terrain with a bright linear feature and a few point targets."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    terrain = 90.0 + 40.0 * np.sin(3.0 * np.pi * xx) * np.cos(2.0 * np.pi * yy)
    field = np.where(yy + 0.3 * xx < 0.55, terrain, 0.6 * terrain)
    band = np.abs(yy - 0.5 * xx - 0.45) < 0.02
    field[band] = 210.0
    field = gaussian_convolve(field, 1.0)
    for fy, fx in ((0.2, 0.7), (0.75, 0.25), (0.8, 0.8)):
        r, c = int(fy * size), int(fx * size)
        field[r - 1:r + 2, c - 1:c + 2] = 250.0
    return field
