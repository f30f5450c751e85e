"""Batch command-line interface: simulate, fit, select, gof, check-plot.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Every run writes ``manifest.json`` with the resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (ConfigurationError, DatasetParseError, SimDesign, benchmark_design,
                   dumps_dataset, load_dataset, simulate_general)
from .gee import (BlockingScheme, DivergedError, FitResult, InitializationError,
                  SingularSystemError, fit, fit_beta_model, init_shared_curvature,
                  preset_scheme)
from .gof import DEFAULT_WINDOWS, check_curves, hosmer_lemeshow, plot_check_curves
from .model import BetaCurveModel, InvalidInputError, ModelSpec, SharedCurvatureModel, parse_orders
from .selection import FitConfig, backward_select, qic_u

log = logging.getLogger("latent_mbl")

CORR = {"indep": "independence", "exch": "exchangeable", "unstr": "unstructured"}
PRESETS = ("benchmark", "section31")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _write_svg(curves, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".svg")
    os.close(fd)
    try:
        plot_check_curves(curves, tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _manifest(args, outputs: list[str], extra: dict | None = None) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    out = {"command": args.command, "config": config, "version": __version__,
           "outputs": sorted(outputs), "created": time.strftime("%Y-%m-%dT%H:%M:%S")}
    if extra:
        out.update(extra)
    return out


def _finish(args, outdir: Path, outputs: list[str], extra: dict | None = None) -> None:
    write_atomic(outdir / "manifest.json", json.dumps(_manifest(args, outputs, extra), indent=2) + "\n")


def _resolve_spec(args, n_responses: int) -> ModelSpec:
    if args.spec and args.orders:
        raise UsageError("give either --spec or --orders, not both")
    if args.spec:
        d = json.loads(Path(args.spec).read_text())
        spec = ModelSpec.from_dict(d.get("orders", d))
    elif args.orders:
        spec = parse_orders(args.orders)
    else:
        spec = ModelSpec.full(n_responses)
    if spec.n_responses != n_responses:
        raise ConfigurationError(f"spec has {spec.n_responses} responses, data has {n_responses}")
    return spec


def _resolve_scheme(text: str, model) -> BlockingScheme:
    if text.upper().startswith("B-") or text.upper() in ("FULL",):
        return preset_scheme(model, text)
    return BlockingScheme.parse(text)


def cmd_simulate(args) -> int:
    if bool(args.preset) == bool(args.design):
        raise UsageError("simulate needs exactly one of --preset or --design")
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}")
        design = benchmark_design(args.seed, args.grid)
    else:
        design = SimDesign.load(args.design)
        if args.seed is not None:
            design.seed = args.seed
    data = simulate_general(design)
    outdir = Path(args.output_dir)
    write_atomic(outdir / "dataset.csv", dumps_dataset(data))
    _finish(args, outdir, ["dataset.csv"], {"design": design.to_dict()})
    return 0


def _load_input(args):
    if not args.input:
        raise UsageError("--input is required")
    return load_dataset(args.input)


def cmd_fit(args) -> int:
    data = _load_input(args)
    structure = CORR[args.corr]
    outdir = Path(args.output_dir)
    try:
        if args.model == "shared-beta":
            model = SharedCurvatureModel(data.n_responses, fixed_beta=args.fixed_beta)
            scheme = _resolve_scheme(args.blocks, model)
            result = fit(data, model, init_shared_curvature(data, model), scheme, structure,
                         args.tol, args.max_iter)
            result.info["init"] = "logistic"
        else:
            spec = _resolve_spec(args, data.n_responses)
            model = BetaCurveModel(spec)
            scheme = _resolve_scheme(args.blocks, model)
            result = fit_beta_model(data, spec, scheme, structure, args.tol, args.max_iter,
                                    init_scale=args.init_scale)
    except DivergedError as exc:
        write_atomic(outdir / "trace.json", json.dumps({"error": str(exc), "trace": exc.trace}, indent=2))
        _finish(args, outdir, ["trace.json"], {"status": "diverged"})
        print(f"error: fit diverged ({exc}); trace written to {outdir / 'trace.json'}", file=sys.stderr)
        return 2
    if result.converged:
        result.qic_u = qic_u(data, result)
    write_atomic(outdir / "fit.json", result.to_json() + "\n")
    write_atomic(outdir / "fit_report.txt", result.report())
    _finish(args, outdir, ["fit.json", "fit_report.txt"],
            {"status": "converged" if result.converged else "max_iter reached"})
    if not result.converged:
        print(f"error: no convergence within {args.max_iter} iterations", file=sys.stderr)
        return 2
    return 0


def cmd_select(args) -> int:
    data = _load_input(args)
    spec = _resolve_spec(args, data.n_responses)
    config = FitConfig(args.blocks, CORR[args.corr], args.tol, args.max_iter)
    trace = backward_select(data, spec, config)
    outdir = Path(args.output_dir)
    write_atomic(outdir / "selection.csv", trace.to_csv())
    outputs = ["selection.csv"]
    if trace.final_fit is not None:
        write_atomic(outdir / "selected_fit.json", trace.final_fit.to_json() + "\n")
        outputs.append("selected_fit.json")
    _finish(args, outdir, outputs, {"final_label": trace.final_spec.label(spec),
                                    "final_orders": trace.final_spec.to_dict()})
    print(trace.final_spec.label(spec))
    return 0


def _load_fit(args) -> FitResult:
    if not args.fit:
        raise UsageError("--fit is required")
    return FitResult.from_dict(json.loads(Path(args.fit).read_text()))


def cmd_gof(args) -> int:
    data = _load_input(args)
    result = _load_fit(args)
    report = hosmer_lemeshow(data, result, args.hl_bins)
    outdir = Path(args.output_dir)
    write_atomic(outdir / "hl.json", report.to_json() + "\n")
    write_atomic(outdir / "hl.txt", report.table())
    _finish(args, outdir, ["hl.json", "hl.txt"])
    return 0


def cmd_check_plot(args) -> int:
    data = _load_input(args)
    result = _load_fit(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for d in args.durations:
        curves = check_curves(data, result, d, DEFAULT_WINDOWS.get(d, args.d_halfwidth),
                              args.t_halfwidth)
        for c in curves:
            name = f"check_d{d:g}_y{c.response}.csv"
            write_atomic(outdir / name, c.to_csv())
            outputs.append(name)
        name = f"check_d{d:g}.svg"
        _write_svg(curves, outdir / name)
        outputs.append(name)
    _finish(args, outdir, outputs)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="latent-mbl", description="Latent-trajectory GEE models for "
                "multivariate binary longitudinal data.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", help="dataset file (K response columns, duration, time)")
        sp.add_argument("--output-dir", default=".", help="directory for outputs and manifest")

    def fitting(sp):
        sp.add_argument("--spec", help="JSON file with orders {a, b, link}")
        sp.add_argument("--orders", help="inline orders, e.g. a=1,b=2,link=2:2:1")
        sp.add_argument("--blocks", default="B-III",
                        help="preset B-I/B-II/B-III or index sets like '0,1;2,3'")
        sp.add_argument("--corr", choices=sorted(CORR), default="indep")
        sp.add_argument("--tol", type=float, default=0.01)
        sp.add_argument("--max-iter", type=int, default=200)

    sp = sub.add_parser("simulate", help="generate a seeded synthetic dataset")
    common(sp, needs_input=False)
    sp.add_argument("--preset", help="named design: benchmark (alias section31)")
    sp.add_argument("--design", help="SimDesign JSON file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--grid", choices=["right", "interior"], default="right")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit a model by blocked GEE scoring")
    common(sp)
    fitting(sp)
    sp.add_argument("--model", choices=["beta", "shared-beta"], default="beta")
    sp.add_argument("--init-scale", choices=["auto", "probability", "logit"], default="auto")
    sp.add_argument("--fixed-beta", type=float, default=None,
                    help="hold the shared curvature at this value (shared-beta model)")
    sp.add_argument("--seed", type=int, default=None, help="recorded in the manifest only")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("select", help="backward order selection by QIC_u")
    common(sp)
    fitting(sp)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("gof", help="Hosmer-Lemeshow statistics for a fit")
    common(sp)
    sp.add_argument("--fit", help="fit.json from the fit command")
    sp.add_argument("--hl-bins", choices=["fixed", "decile"], default="fixed")
    sp.set_defaults(func=cmd_gof)

    sp = sub.add_parser("check-plot", help="predicted vs empirical curves (CSV + SVG)")
    common(sp)
    sp.add_argument("--fit", help="fit.json from the fit command")
    sp.add_argument("--durations", type=float, nargs="+", default=[2.0, 8.0])
    sp.add_argument("--d-halfwidth", type=float, default=1.0,
                    help="duration window for durations without a default window")
    sp.add_argument("--t-halfwidth", type=float, default=0.05)
    sp.set_defaults(func=cmd_check_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "simulate" and args.seed is None and args.preset:
        args.seed = 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DatasetParseError, ConfigurationError, InvalidInputError, FileNotFoundError,
            IsADirectoryError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DivergedError, SingularSystemError, InitializationError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
