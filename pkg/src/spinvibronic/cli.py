"""Batch command-line front end.

Subcommands:
  solve <config>        per-sector solves and the full report file set
  fit <csv> <config>    fit surface samples, write a solve-ready config
  table1 <dir>          run every config in a directory and compare the
                        computed observables against the packaged reference
  surfaces <config>     emit the analytic adiabatic surfaces as CSV

Exit codes: 0 success, 2 configuration problems, 3 solver or fit failures.
All outputs are deterministic for a fixed seed; the output directory can be
overridden with --out or the SPINVIB_OUT environment variable.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import importlib.resources
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import AnalysisError, CalibrationError
from .config import ConfigError, RunConfig, parse_config, serialize_config
from .eigensolver import ConvergenceError, SolverError
from .hamiltonian import PRESETS
from .params import ParameterError, pes_to_couplings
from .pes import PesFitError, adiabatic_surfaces, fit_pes, read_pes_csv, write_pes_csv
from .reports import run_report, write_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_SOLVE_ERRORS = (SolverError, ConvergenceError, AnalysisError, CalibrationError, PesFitError)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    solver = cfg.solver
    model = cfg.model
    output = cfg.output
    if args.cutoff is not None:
        solver = dataclasses.replace(solver, cutoff=args.cutoff, converge=False)
    if args.order is not None:
        model = dataclasses.replace(model, order=args.order)
    if args.preset is not None:
        model = dataclasses.replace(model, preset=args.preset)
    outdir = os.environ.get("SPINVIB_OUT", output.directory)
    if args.out is not None:
        outdir = args.out
    output = dataclasses.replace(output, directory=str(outdir))
    return dataclasses.replace(cfg, solver=solver, model=model, output=output)


def _limit_threads(n: int | None) -> None:
    if n is None:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=n)
    except ImportError:
        print("threadpoolctl not available; --threads ignored", file=sys.stderr)


def cmd_solve(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    report = run_report(cfg)
    written = write_all(report, cfg.output.directory, cfg.output.formats)
    for p in written:
        print(p)
    print(
        f"{report.defect}: gamma1 = {report.gamma1:.4f} meV, gamma2 = {report.gamma2:.4f} meV, "
        f"p_u = {report.p_u:.4f}, p_g = {report.p_g:.4f}"
        + (
            f", lambda_eff = {report.lambda_eff:.4f} meV"
            if report.soc_enabled
            else " (spin-orbit off)"
        )
    )
    return EXIT_OK


def cmd_surfaces(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    c = pes_to_couplings(cfg.defect)
    grid = np.linspace(args.qmin, args.qmax, args.points)
    curve = adiabatic_surfaces(c, cfg.defect.lambda_corr, cfg.model.preset, grid)
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "surfaces.csv"
    write_pes_csv(curve, path)
    print(path)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    samples = read_pes_csv(args.csv)
    result = fit_pes(samples, cfg.defect, preset=cfg.model.preset)
    fitted_cfg = dataclasses.replace(cfg, defect=result.params)
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "fitted.conf"
    path.write_text(serialize_config(fitted_cfg), encoding="utf-8")
    print(path)
    for i, rms in enumerate(result.rms_per_surface):
        tag = f"{rms:.6g} meV" if np.isfinite(rms) else "masked"
        print(f"surface {i + 1} rms residual: {tag}")
    return EXIT_OK


def _load_reference() -> dict[str, dict[str, float]]:
    ref: dict[str, dict[str, float]] = {}
    data = importlib.resources.files("spinvibronic.data").joinpath("reference_values.csv")
    with data.open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(filter(lambda l: not l.startswith("#"), fh)):
            ref.setdefault(row["defect"], {})[row["quantity"]] = float(row["value"])
    return ref


TABLE1_QUANTITIES = ("gamma1", "gamma2", "p_u", "p_g", "lambda_eff", "zpl_shift_ev")


def cmd_table1(args) -> int:
    configs = sorted(Path(args.dir).glob("*.conf"))
    if not configs:
        print(f"no .conf files in {args.dir}", file=sys.stderr)
        return EXIT_CONFIG
    reference = _load_reference()
    rows = []
    failed = False
    for path in configs:
        cfg = _apply_overrides(parse_config(path), args)
        try:
            report = run_report(cfg)
        except _SOLVE_ERRORS as exc:
            print(f"{path.name}: FAILED ({exc})", file=sys.stderr)
            rows.append({"defect": cfg.defect.name, "status": "FAILED"})
            failed = True
            continue
        row = {"defect": report.defect, "status": "ok"}
        ref = reference.get(report.defect, {})
        computed = {
            "gamma1": report.gamma1,
            "gamma2": report.gamma2,
            "p_u": report.p_u,
            "p_g": report.p_g,
            "lambda_eff": report.lambda_eff,
            "zpl_shift_ev": report.zpl_shift_ev,
        }
        for q in TABLE1_QUANTITIES:
            value = computed.get(q)
            row[q] = value
            row[q + "_ref"] = ref.get(q)
            if value is not None and ref.get(q) not in (None, 0.0):
                row[q + "_dev"] = (value - ref[q]) / abs(ref[q])
            else:
                row[q + "_dev"] = None
        rows.append(row)

    outdir = Path(cfg.output.directory if configs else ".")
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "table1.csv"
    columns = ["defect", "status"]
    for q in TABLE1_QUANTITIES:
        columns += [q, q + "_ref", q + "_dev"]
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for col in columns:
                v = row.get(col)
                cells.append("" if v is None else (f"{v:.6g}" if isinstance(v, float) else str(v)))
            fh.write(",".join(cells) + "\n")
    print(out)

    header = f"{'defect':8s} {'quantity':14s} {'computed':>12s} {'reference':>12s} {'rel dev':>9s}"
    print(header)
    print("-" * len(header))
    for row in rows:
        if row.get("status") != "ok":
            print(f"{row['defect']:8s} {'(solve failed)':14s}")
            continue
        for q in TABLE1_QUANTITIES:
            v, r, dev = row.get(q), row.get(q + "_ref"), row.get(q + "_dev")
            if v is None:
                continue
            print(
                f"{row['defect']:8s} {q:14s} {v:12.5g} "
                + (f"{r:12.5g}" if r is not None else f"{'-':>12s}")
                + (f" {dev * 100:8.2f}%" if dev is not None else f" {'-':>8s}")
            )
    return EXIT_SOLVER if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinvib",
        description="Vibronic and spin-orbit level structure of dual Jahn-Teller color centers",
    )
    parser.add_argument("--threads", type=int, default=None, help="limit BLAS thread count")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cutoff", type=int, default=None, help="force a fixed oscillator cutoff")
    common.add_argument("--order", type=int, choices=(1, 2), default=None)
    common.add_argument("--preset", choices=PRESETS, default=None)
    common.add_argument("--out", default=None, help="output directory")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="solve one defect and write reports")
    p.add_argument("config")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fit", parents=[common], help="fit surface samples to model parameters")
    p.add_argument("csv")
    p.add_argument("config")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("table1", parents=[common], help="compare a config directory to reference values")
    p.add_argument("dir")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("surfaces", parents=[common], help="emit analytic adiabatic surfaces")
    p.add_argument("config")
    p.add_argument("--qmin", type=float, default=-3.0)
    p.add_argument("--qmax", type=float, default=3.5)
    p.add_argument("--points", type=int, default=261)
    p.set_defaults(func=cmd_surfaces)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _limit_threads(args.threads)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, FileNotFoundError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _SOLVE_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
