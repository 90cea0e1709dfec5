"""Run pipeline shared by the CLI, and the benchmark harness.

A bench suite is a JSON file::

    {
      "images": {"peppers": "images/peppers.pgm", "blocks": "phantom:blocks"},
      "grid": {"images": ["peppers"], "models": ["hpcpde", "tdfm", "proposed"],
               "looks": [1, 3, 5, 10]},
      "cells": [{"image": "sar1", "model": "proposed", "preset": "sar-image1",
                 "noisy": true}],
      "seeds": 5,
      "table": "table.csv"
    }

``grid`` expands to one cell per (image, looks, model); ``cells`` lists extra
cells explicitly. Clean images are speckled in-harness with seeds
``base_seed, base_seed + 1, ...``; cells marked ``noisy`` take the image as
already speckled and stop on relative change. Relative image paths are
resolved against the suite file's directory.
"""
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reference_tables
from .config import PRESETS, ConfigError, config_from_dict
from .netpbm import NetpbmError, quantize, read_netpbm, write_netpbm
from .noise import SpeckleSpec, apply_noise
from .params import MODELS
from .report import export_contour_grid
from .solver import SolverError, run_color, run_model
from .synthetic import piecewise_constant, sar_scene

__all__ = [
    "WORKERS_ENV",
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_IO",
    "EXIT_SOLVER",
    "BenchCell",
    "BenchSuite",
    "TABLE_COLUMNS",
    "load_image",
    "output_maxval",
    "prepare_inputs",
    "execute",
    "write_outputs",
    "load_suite",
    "run_suite",
]

WORKERS_ENV = "DESPECKLE_WORKERS"

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3

_PHANTOMS = {"blocks": piecewise_constant, "sar": sar_scene}


def load_image(path):
    """Read a Netpbm file or a built-in scene (``phantom:blocks``, ``phantom:sar``).

    Returns ``(image, maxval)``.
    """
    path = str(path)
    if path.startswith("phantom:"):
        name = path.split(":", 1)[1]
        if name not in _PHANTOMS:
            raise FileNotFoundError(f"unknown built-in image {path!r}")
        return _PHANTOMS[name](), 255
    return read_netpbm(path)


def output_maxval(image, maxval=255):
    """Smallest of ``max(maxval, 255)`` and 65535 that holds the quantized image."""
    base = max(int(maxval), 255)
    if int(quantize(image, 65535).max(initial=0)) <= base:
        return base
    return 65535


def _extension(image):
    return ".ppm" if np.ndim(image) == 3 else ".pgm"


def prepare_inputs(cfg):
    """Load ``(noisy, reference, maxval)`` for a resolved run config."""
    image, maxval = load_image(cfg.input)
    if cfg.simulate:
        reference = image
        noisy = apply_noise(image, SpeckleSpec(cfg.looks, cfg.seed))
    else:
        noisy = image
        reference = None
        if cfg.reference is not None:
            reference, _ = load_image(cfg.reference)
            if reference.shape != noisy.shape:
                raise ValueError(f"reference shape {reference.shape} differs from input {noisy.shape}")
    if cfg.stop.mode == "best-psnr" and reference is None:
        raise ConfigError("best-psnr stopping needs a reference image")
    return noisy, reference, maxval


def execute(cfg, noisy, reference):
    """Run the model described by ``cfg``; returns ``(restored, report)``."""
    run = run_color if np.ndim(noisy) == 3 else run_model
    return run(noisy, kind=cfg.model, params=cfg.params, weights=cfg.scheme, stop=cfg.stop,
               reference=reference, floor=cfg.floor, intensity_scale=cfg.intensity_scale)


def write_outputs(out_dir, restored, report, cfg, maxval=255, contour_stride=None):
    """Write ``restored.pgm|ppm``, ``trace.csv``, ``summary.json`` and ``config.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    image_path = out / ("restored" + _extension(restored))
    write_netpbm(restored, image_path, maxval=output_maxval(restored, maxval))
    report.write_csv(out / "trace.csv")
    report.write_json(out / "summary.json")
    write_config_echo(cfg, out / "config.json")
    if contour_stride is not None:
        field = restored if np.ndim(restored) == 2 else np.mean(restored, axis=0)
        export_contour_grid(field, contour_stride, out / "contour.csv")
    return image_path


def write_config_echo(cfg, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class BenchCell:
    image: str
    model: str
    looks: int
    preset: str = None
    noisy: bool = False
    params: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def name(self):
        if self.noisy:
            return f"{self.image}-{self.model}"
        return f"{self.image}-{self.model}-L{self.looks}"


@dataclass
class BenchSuite:
    images: dict
    cells: list
    seeds: tuple = (0, 1, 2, 3, 4)
    table: str = "table.csv"
    scheme: dict = field(default_factory=dict)
    stop: dict = field(default_factory=dict)
    crop: int = None
    root: str = "."


_SUITE_KEYS = {"images", "grid", "cells", "seeds", "base_seed", "table", "scheme", "stop", "crop"}
_CELL_KEYS = {"image", "model", "looks", "preset", "noisy", "params"}


def _cell_from(entry, where):
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in entry:
        if key not in _CELL_KEYS:
            raise ConfigError(f"unknown key '{where}.{key}'")
    for key in ("image", "model"):
        if key not in entry:
            raise ConfigError(f"{where}: missing key '{key}'")
    if entry["model"] not in MODELS:
        raise ConfigError(f"{where}.model: unknown model {entry['model']!r}")
    noisy = bool(entry.get("noisy", False))
    looks = entry.get("looks", 1 if noisy else None)
    if not isinstance(looks, int) or isinstance(looks, bool) or looks < 1:
        raise ConfigError(f"{where}.looks: expected a positive integer")
    return BenchCell(image=entry["image"], model=entry["model"], looks=looks,
                     preset=entry.get("preset"), noisy=noisy, params=dict(entry.get("params", {})))


def load_suite(path):
    """Parse and validate a suite file; unknown keys are rejected."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("suite must be a JSON object")
    for key in data:
        if key not in _SUITE_KEYS:
            raise ConfigError(f"unknown key '{key}'")
    images = data.get("images", {})
    if not isinstance(images, dict):
        raise ConfigError("images: expected an object")
    cells = []
    grid = data.get("grid")
    if grid is not None:
        for key in grid:
            if key not in ("images", "models", "looks"):
                raise ConfigError(f"unknown key 'grid.{key}'")
        for image in grid.get("images", []):
            for looks in grid.get("looks", [1, 3, 5, 10]):
                for model in grid.get("models", list(MODELS)):
                    cells.append(_cell_from({"image": image, "model": model, "looks": looks}, "grid"))
    for i, entry in enumerate(data.get("cells", [])):
        cells.append(_cell_from(entry, f"cells[{i}]"))
    seeds = data.get("seeds", 5)
    base = int(data.get("base_seed", 0))
    if isinstance(seeds, int) and not isinstance(seeds, bool):
        if seeds < 1:
            raise ConfigError("seeds: must be >= 1")
        seeds = tuple(range(base, base + seeds))
    elif isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds):
        seeds = tuple(seeds)
    else:
        raise ConfigError("seeds: expected a positive count or a list of integers")
    crop = data.get("crop")
    if crop is not None and (not isinstance(crop, int) or crop < 3):
        raise ConfigError("crop: expected an integer >= 3")
    return BenchSuite(images=images, cells=cells, seeds=seeds, table=data.get("table", "table.csv"),
                      scheme=data.get("scheme", {}), stop=data.get("stop", {}), crop=crop,
                      root=str(path.parent))


def _center_crop(image, size):
    h, w = image.shape[-2:]
    if size is None or (h <= size and w <= size):
        return image
    r0, c0 = max((h - size) // 2, 0), max((w - size) // 2, 0)
    return image[..., r0:r0 + size, c0:c0 + size].copy()


def _resolve_image(suite, name):
    if name not in suite.images:
        raise FileNotFoundError(f"image {name!r} is not listed in the suite")
    path = suite.images[name]
    if path.startswith("phantom:") or os.path.isabs(path):
        return path
    return os.path.join(suite.root, path)


def _cell_config(suite, cell, seed, image_path, color):
    data = {"input": image_path, "model": cell.model, "looks": cell.looks, "seed": seed,
            "simulate": not cell.noisy, "color": color, "scheme": suite.scheme,
            "params": cell.params}
    preset = cell.preset
    if preset is None and cell.image in PRESETS:
        preset = f"{cell.model}-{cell.image}-L{cell.looks}"
    if preset is not None:
        data["preset"] = preset
    stop = dict(suite.stop)
    if cell.noisy:
        stop["mode"] = "relative-change"
    data["stop"] = stop
    return config_from_dict(data)


def _run_one(args):
    suite, cell, seed, out_dir = args
    result = {"cell": cell.name, "seed": seed, "status": "ok", "category": None}
    try:
        path = _resolve_image(suite, cell.image)
        image, maxval = load_image(path)
        image = _center_crop(image, suite.crop)
        color = image.ndim == 3
        cfg = _cell_config(suite, cell, seed, path, color)
        if cfg.simulate:
            reference = image
            noisy = apply_noise(image, SpeckleSpec(cfg.looks, cfg.seed))
        else:
            noisy, reference = image, None
        restored, report = execute(cfg, noisy, reference)
        write_outputs(out_dir, restored, report, cfg, maxval)
    except (OSError, NetpbmError) as exc:
        result.update(status=f"io error: {exc}", category=EXIT_IO)
        return result
    except SolverError as exc:
        result.update(status=f"solver failure: {exc}", category=EXIT_SOLVER)
        return result
    except ValueError as exc:
        result.update(status=f"config error: {exc}", category=EXIT_USAGE)
        return result
    final = report.final
    result.update(
        preset=cfg.preset or "",
        psnr=final.get("psnr_db", math.nan),
        mssim=final.get("mssim", math.nan),
        mssim_paper=final.get("mssim_paper", math.nan),
        si=final["speckle_index"],
        noisy_psnr=report.noisy.get("psnr_db", math.nan),
        noisy_si=report.noisy["speckle_index"],
        iters=report.iterations,
    )
    return result


TABLE_COLUMNS = (
    "image", "looks", "model", "preset", "seeds", "psnr_mean", "psnr_sd", "mssim_mean", "mssim_sd",
    "mssim_paper_mean", "si_mean", "si_sd", "noisy_psnr_mean", "noisy_si_mean", "iters_mean",
    "ref_psnr", "ref_mssim", "ref_si", "psnr_minus_ref", "status",
)


def _stats(values):
    arr = np.array([v for v in values if isinstance(v, float) and not math.isnan(v)])
    if arr.size == 0:
        return math.nan, math.nan
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else math.nan
    return float(np.mean(arr)), sd


def _num(v, digits=4):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}f}"


def _table_row(cell, results):
    ok = [r for r in results if r["status"] == "ok"]
    failed = [r for r in results if r["status"] != "ok"]
    psnr_m, psnr_sd = _stats([r["psnr"] for r in ok])
    mssim_m, mssim_sd = _stats([r["mssim"] for r in ok])
    si_m, si_sd = _stats([r["si"] for r in ok])
    ref = reference_tables.lookup(cell.image, cell.looks, cell.model) if not cell.noisy else None
    ref_si = None
    if cell.noisy and cell.preset in reference_tables.SAR_SI:
        ref_si = reference_tables.SAR_SI[cell.preset][1]
    ref_mssim, ref_psnr = ref if ref else (None, None)
    if failed:
        status = f"failed {len(failed)}/{len(results)}: {failed[0]['status']}"
    else:
        status = "ok"
    presets = sorted({r["preset"] for r in ok})
    return {
        "image": cell.image,
        "looks": "" if cell.noisy else cell.looks,
        "model": cell.model,
        "preset": presets[0] if presets else (cell.preset or ""),
        "seeds": len(ok),
        "psnr_mean": _num(psnr_m), "psnr_sd": _num(psnr_sd),
        "mssim_mean": _num(mssim_m), "mssim_sd": _num(mssim_sd),
        "mssim_paper_mean": _num(_stats([r["mssim_paper"] for r in ok])[0]),
        "si_mean": _num(si_m), "si_sd": _num(si_sd),
        "noisy_psnr_mean": _num(_stats([r["noisy_psnr"] for r in ok])[0]),
        "noisy_si_mean": _num(_stats([r["noisy_si"] for r in ok])[0]),
        "iters_mean": _num(_stats([float(r["iters"]) for r in ok])[0], 1),
        "ref_psnr": _num(ref_psnr, 2) if ref_psnr is not None else "",
        "ref_mssim": _num(ref_mssim) if ref_mssim is not None else "",
        "ref_si": _num(ref_si) if ref_si is not None else "",
        "psnr_minus_ref": _num(psnr_m - ref_psnr, 2) if ref_psnr is not None else "",
        "status": status,
    }


def _workers():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_suite(suite, out_dir, workers=None, progress=None):
    """Run every cell and seed, write the per-run trees and ``table.csv``.

    Returns ``(exit_code, rows)``. Failed runs are recorded in the table's
    ``status`` column and the remaining cells still complete.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = _workers() if workers is None else workers
    tasks = []
    for cell in suite.cells:
        seeds = suite.seeds[:1] if cell.noisy else suite.seeds
        for seed in seeds:
            run_dir = out / (cell.name if cell.noisy else f"{cell.name}-s{seed}")
            tasks.append((suite, cell, seed, str(run_dir)))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = []
        for task in tasks:
            results.append(_run_one(task))
            if progress is not None:
                progress(results[-1])
    by_cell = {}
    for (_, cell, _, _), res in zip(tasks, results):
        by_cell.setdefault(cell, []).append(res)
    rows = [_table_row(cell, by_cell[cell]) for cell in dict.fromkeys(suite.cells)]
    with open(out / suite.table, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    codes = {r["category"] for r in results if r["category"] is not None}
    code = max(codes) if codes else EXIT_OK
    return code, rows

