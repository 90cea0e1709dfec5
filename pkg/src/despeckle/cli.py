"""Command-line interface: ``despeckle noise|denoise|eval|bench|phantom``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 solver failure.
"""
import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .bench import (
    EXIT_IO,
    EXIT_OK,
    EXIT_SOLVER,
    EXIT_USAGE,
    execute,
    load_image,
    load_suite,
    output_maxval,
    prepare_inputs,
    run_suite,
    write_outputs,
)
from .config import ConfigError, config_from_dict
from .metrics import psnr, speckle_index, ssim
from .netpbm import NetpbmError, quantize, write_netpbm
from .noise import SpeckleSpec, apply_noise
from .params import MODELS
from .solver import SolverError
from .synthetic import piecewise_constant, sar_scene


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; 2 is reserved for I/O here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v, digits=4):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{digits}f}"


def _cmd_noise(args):
    image, maxval = load_image(args.input)
    noisy = apply_noise(image, SpeckleSpec(args.looks, args.seed))
    mv = args.maxval or output_maxval(noisy, maxval)
    write_netpbm(noisy, args.output, maxval=mv, binary=not args.ascii)
    # the SI of what was actually written
    print(f"SI={_fmt(speckle_index(quantize(noisy, mv)))}")
    return EXIT_OK


_PARAM_FLAGS = ("alpha", "beta", "gamma", "lam", "iota", "nu", "xi", "k", "k_h", "h_kind",
                "hpcpde_s", "fidelity")
_SCHEME_FLAGS = ("theta1", "theta2", "theta", "tau", "gs_tol", "gs_max_sweeps")
_STOP_FLAGS = {"stop": "mode", "epsilon": "epsilon", "patience": "patience", "max_iters": "max_iters"}


def _denoise_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("input", "model", "looks", "seed", "preset", "reference", "floor", "intensity_scale"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if args.simulate:
        data["simulate"] = True
    for section, names in (("params", {n: n for n in _PARAM_FLAGS}),
                           ("scheme", {n: n for n in _SCHEME_FLAGS}),
                           ("stop", _STOP_FLAGS)):
        for flag, key in names.items():
            v = getattr(args, flag)
            if v is not None:
                data.setdefault(section, {})[key] = v
    if "input" not in data:
        raise UsageError("denoise: --input is required (or give it in --config)")
    return config_from_dict(data)


def _cmd_denoise(args):
    cfg = _denoise_config(args)
    noisy, reference, maxval = prepare_inputs(cfg)
    restored, report = execute(cfg, noisy, reference)
    out_dir = args.report
    write_netpbm(restored, args.output, maxval=output_maxval(restored, maxval), binary=not args.ascii)
    if out_dir is not None:
        write_outputs(out_dir, restored, report, cfg, maxval, contour_stride=args.contour_stride)
    final = report.final
    ps = _fmt(final["psnr_db"], 2) if "psnr_db" in final else "n/a"
    ms = _fmt(final["mssim"]) if "mssim" in final else "n/a"
    print(f"PSNR={ps} MSSIM={ms} SI={_fmt(final['speckle_index'])} "
          f"iterations={report.iterations} best_iter={report.best_iter} stop={report.stop_reason}")
    return EXIT_OK


def _cmd_eval(args):
    ref, _ = load_image(args.reference)
    test, _ = load_image(args.test)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    p = psnr(ref, test)
    if ref.ndim == 3:
        s = float(np.mean([ssim(r, t)[0] for r, t in zip(ref, test)]))
    else:
        s = ssim(ref, test)[0]
    try:
        si = speckle_index(test)
    except ValueError:  # zero-mean test image
        si = None
    print(f"PSNR={_fmt(p, 2)} SSIM={_fmt(s)} SI={'n/a' if si is None else _fmt(si)}")
    if args.json:
        doc = {"psnr_db": p if math.isfinite(p) else ("inf" if p > 0 else "-inf"),
               "ssim": s, "speckle_index": si}
        with open(args.json, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def _cmd_bench(args):
    suite = load_suite(args.suite)

    def progress(res):
        print(f"{res['cell']} seed={res['seed']}: {res['status']}", file=sys.stderr)

    code, rows = run_suite(suite, args.out, progress=None if args.quiet else progress)
    for row in rows:
        print(f"{row['image']} L={row['looks']} {row['model']}: PSNR={row['psnr_mean'] or 'n/a'} "
              f"MSSIM={row['mssim_mean'] or 'n/a'} SI={row['si_mean'] or 'n/a'} [{row['status']}]")
    return code


def _cmd_phantom(args):
    image = piecewise_constant(args.size) if args.kind == "blocks" else sar_scene(args.size)
    write_netpbm(image, args.output, maxval=255, binary=not args.ascii)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="despeckle", description="Speckle reduction with coupled fourth-order PDE models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    n = sub.add_parser("noise", help="apply multiplicative Gamma speckle")
    n.add_argument("--input", required=True)
    n.add_argument("--looks", type=int, required=True)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--output", required=True)
    n.add_argument("--maxval", type=int, help="output maxval (default: input maxval, 65535 if exceeded)")
    n.add_argument("--ascii", action="store_true", help="write P2/P3 instead of P5/P6")

    d = sub.add_parser("denoise", help="restore a speckled image")
    d.add_argument("--input")
    d.add_argument("--output", required=True, help="restored image path")
    d.add_argument("--report", help="directory for trace.csv, summary.json and config.json")
    d.add_argument("--config", help="JSON run configuration; flags override it")
    d.add_argument("--model", choices=MODELS)
    d.add_argument("--preset", help="<image>-<gray|color>-L<n>, <model>-<image>-L<n>, sar-image1 or sar-image2")
    d.add_argument("--looks", type=int, help="look count (selects the default preset row)")
    d.add_argument("--seed", type=int)
    d.add_argument("--simulate", action="store_true",
                   help="treat --input as clean, speckle it with --looks/--seed and use it as reference")
    d.add_argument("--reference")
    for name in ("alpha", "beta", "gamma", "lam", "iota", "nu", "xi", "k", "k_h"):
        d.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    d.add_argument("--h-kind", dest="h_kind", choices=("rational", "clip"))
    d.add_argument("--hpcpde-s", dest="hpcpde_s", choices=("intensity", "gradient"))
    d.add_argument("--fidelity", choices=("squared", "signed"))
    for name in ("theta1", "theta2", "theta", "tau", "gs_tol"):
        d.add_argument("--" + name.replace("_", "-"), dest=name, type=float)
    d.add_argument("--gs-max-sweeps", dest="gs_max_sweeps", type=int)
    d.add_argument("--stop", choices=("best-psnr", "relative-change", "max-iters"))
    d.add_argument("--epsilon", type=float)
    d.add_argument("--patience", type=int)
    d.add_argument("--max-iters", dest="max_iters", type=int)
    d.add_argument("--floor", type=float)
    d.add_argument("--intensity-scale", dest="intensity_scale", type=float)
    d.add_argument("--contour-stride", dest="contour_stride", type=int,
                   help="also export contour.csv at this stride into --report")
    d.add_argument("--ascii", action="store_true")

    e = sub.add_parser("eval", help="compare a test image against a reference")
    e.add_argument("--reference", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--json", help="write the metrics to this JSON file")

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("--suite", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--quiet", action="store_true")

    ph = sub.add_parser("phantom", help="write a synthetic test scene")
    ph.add_argument("--kind", choices=("blocks", "sar"), default="blocks")
    ph.add_argument("--size", type=int, default=128)
    ph.add_argument("--output", required=True)
    ph.add_argument("--ascii", action="store_true")
    return p


_COMMANDS = {"noise": _cmd_noise, "denoise": _cmd_denoise, "eval": _cmd_eval,
             "bench": _cmd_bench, "phantom": _cmd_phantom}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, NetpbmError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
