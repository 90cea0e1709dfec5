"""Full-reference and no-reference quality measures, and the per-run report."""
import csv
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

__all__ = [
    "SsimParams",
    "psnr",
    "ssim",
    "mssim",
    "speckle_index",
    "relative_change",
    "IterationRecord",
    "MetricsReport",
    "TRACE_COLUMNS",
]


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2

    def taps(self):
        r = self.window // 2
        x = np.arange(-r, r + 1, dtype=np.float64)
        w = np.exp(-0.5 * (x / self.sigma) ** 2)
        return w / w.sum()


def _pair(reference, test):
    a = np.asarray(reference, dtype=np.float64)
    b = np.asarray(test, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, test):
    """``10 log10(max(reference)^2 / MSE)`` in dB; ``inf`` when the images are equal.

    The peak is taken from ``reference`` only, so the function is not
    symmetric in its arguments.
    """
    a, b = _pair(reference, test)
    peak = float(np.max(a))
    if peak <= 0:
        raise ValueError("reference must have a positive maximum")
    with np.errstate(over="ignore"):
        mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    if not math.isfinite(mse):
        return -math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _smooth(f, taps):
    out = ndimage.correlate1d(f, taps, axis=0, mode="reflect")
    return ndimage.correlate1d(out, taps, axis=1, mode="reflect")


def ssim(reference, test, params=SsimParams()):
    """Windowed SSIM of two single-channel images.

    Returns ``(mean, ssim_map)``. Local statistics use a separable Gaussian
    window with reflective padding.
    """
    a, b = _pair(reference, test)
    if a.ndim != 2:
        raise ValueError("ssim expects single-channel images")
    if min(a.shape) < params.window:
        raise ValueError(f"image {a.shape} is smaller than the {params.window}x{params.window} window")
    w = params.taps()
    with np.errstate(over="ignore", invalid="ignore"):
        return _ssim(a, b, w, params)


def _ssim(a, b, w, params):
    mu_a = _smooth(a, w)
    mu_b = _smooth(b, w)
    var_a = _smooth(a * a, w) - mu_a * mu_a
    var_b = _smooth(b * b, w) - mu_b * mu_b
    cov = _smooth(a * b, w) - mu_a * mu_b
    c1, c2 = params.c1, params.c2
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    )
    return float(np.mean(smap)), smap


def mssim(values, mode="windowed-final"):
    """Mean SSIM.

    ``iteration-average``: ``values`` is the sequence of per-iteration mean
    SSIM scores and the result is their average. ``windowed-final``:
    ``values`` is either an SSIM map or a per-iteration sequence whose last
    entry is the selected iterate's score.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty SSIM trace")
    if mode == "iteration-average":
        return float(np.mean(arr))
    if mode == "windowed-final":
        return float(np.mean(arr)) if arr.ndim == 2 else float(arr.ravel()[-1])
    raise ValueError(f"unknown mssim mode {mode!r}")


def speckle_index(img):
    """Population standard deviation over mean."""
    img = np.asarray(img, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        return _speckle_index(img)


def _speckle_index(img):
    mu = float(np.mean(img))
    if mu == 0.0:
        raise ValueError("speckle index undefined for a zero-mean image")
    return float(np.std(img)) / mu


def relative_change(prev, cur):
    """``||cur - prev||^2 / ||prev||^2``."""
    a, b = _pair(prev, cur)
    den = float(np.sum(a * a))
    if den == 0.0:
        raise ValueError("relative change undefined for a zero previous iterate")
    d = b - a
    with np.errstate(over="ignore"):
        return float(np.sum(d * d)) / den


TRACE_COLUMNS = (
    "iter", "psnr_db", "ssim", "mssim_paper", "rel_change",
    "speckle_index", "gs_sweeps", "min_I", "max_I",
)


@dataclass
class IterationRecord:
    iter: int
    psnr_db: float = math.nan
    ssim: float = math.nan
    mssim_paper: float = math.nan
    rel_change: float = math.nan
    speckle_index: float = math.nan
    gs_sweeps: int = 0
    min_I: float = math.nan
    max_I: float = math.nan


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


@dataclass
class MetricsReport:
    records: list = field(default_factory=list)
    best_iter: int = 0
    stop_reason: str = ""
    final: dict = field(default_factory=dict)
    noisy: dict = field(default_factory=dict)
    monitors: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    channels: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])

    def summary(self):
        out = {
            "iterations": self.iterations,
            "best_iter": self.best_iter,
            "stop_reason": self.stop_reason,
            "final": self.final,
            "noisy": self.noisy,
            "monitors": self.monitors,
            "params": self.params,
        }
        if self.channels:
            out["channels"] = [
                {"final": c.final, "noisy": c.noisy, "monitors": c.monitors} for c in self.channels
            ]
        return _jsonable(out)

    def write_json(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def records_as_dicts(self):
        return [asdict(r) for r in self.records]
