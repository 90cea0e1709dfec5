"""Contour-grid export for external plotting."""
import csv

import numpy as np

__all__ = ["export_contour_grid", "read_contour_grid"]


def export_contour_grid(field, stride, path):
    """Write ``x,y,value`` rows for every ``stride``-th pixel in each direction.

    ``x`` is the column index and ``y`` the row index of the full-resolution
    grid; rows are emitted in row-major order. Values are written with
    ``repr`` so a stride-1 export reconstructs the field exactly.
    """
    f = np.asarray(field, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"expected a 2D field, got shape {f.shape}")
    if int(stride) != stride or stride < 1:
        raise ValueError("stride must be a positive integer")
    stride = int(stride)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("x", "y", "value"))
        for y in range(0, f.shape[0], stride):
            for x in range(0, f.shape[1], stride):
                writer.writerow((x, y, repr(float(f[y, x]))))


def read_contour_grid(path):
    """Read a grid written by :func:`export_contour_grid` back into an array."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(data[:, 0]).astype(int)
    ys = np.unique(data[:, 1]).astype(int)
    out = np.empty((len(ys), len(xs)))
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    for x, y, v in data:
        out[yi[int(y)], xi[int(x)]] = v
    return out
