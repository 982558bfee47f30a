"""pefplan command line: place, verify, spectrum, flow."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io, plotting, spectral
from .energy import check_density, spectral_report
from .errors import (
    DensityInfeasible,
    ErosionTooLarge,
    InfeasibleBox,
    InsufficientData,
    InvalidPinIndex,
    NegativeDensity,
    NonFiniteObjective,
    NonZeroMeanInput,
)
from .field import Grid, ScalarField, density, residual
from .flow import LEDGER_COLUMNS, FlowConfig, heat_flow_compare, wgf_run
from .optimize import DIAG_COLUMNS, ObjectiveConfig, StepSchedule, StopCriteria, pgd_run, project
from .verify import run_battery

log = logging.getLogger("pefplan")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
INPUT_ERRORS = (io.InputError, InvalidPinIndex, InfeasibleBox)
NUMERIC_ERRORS = (ErosionTooLarge, DensityInfeasible, NonFiniteObjective, NegativeDensity, NonZeroMeanInput, InsufficientData)


def _setup_logging():
    level = os.environ.get("PEF_LOG", "error").lower()
    logging.basicConfig(
        level={"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _grid(args, rc: io.RunConfig, width: float, height: float, default: int) -> Grid:
    g = args.grid or rc.grid or (default, default)
    return Grid(int(g[0]), int(g[1]), width, height)


def _epsilon(rc: io.RunConfig, design) -> float:
    if rc.epsilon is not None:
        return float(rc.epsilon)
    return min(0.02, 0.25 * design.min_inradius)


def _objective(rc: io.RunConfig, design, grid: Grid) -> ObjectiveConfig:
    try:
        return ObjectiveConfig(
            lam=float(rc.lam),
            epsilon=_epsilon(rc, design),
            gamma=rc.gamma,
            grid=grid,
            wl_model=rc.wl_model,
            penalty=rc.penalty,
        )
    except ValueError as exc:
        raise io.InputError(str(exc)) from exc


def _design_and_start(path, seed: int):
    design, initial = io.load_design(path)
    design.check_fits()
    if initial is None:
        rng = np.random.default_rng(seed)
        lo = design.sizes / 2
        hi = np.array([design.width, design.height]) - lo
        initial = rng.uniform(lo, hi)
    return design, project(design, initial)


def _prefix(p: str) -> Path:
    return Path(p)


def _with_suffix(prefix: Path, suffix: str) -> Path:
    return prefix.with_name(prefix.name + suffix)


# --- subcommands --------------------------------------------------------------------

def cmd_place(args) -> int:
    rc = io.load_config(args.config)
    design, c0 = _design_and_start(args.design, args.seed)
    grid = _grid(args, rc, design.width, design.height, 256)
    cfg = _objective(rc, design, grid)
    try:
        schedule = StepSchedule(rc.kind, rc.eta0)
    except ValueError as exc:
        raise io.InputError(str(exc)) from exc
    stop = StopCriteria(int(rc.max_iters), rc.gm_tol)
    c, diag = pgd_run(design, c0, cfg, schedule, stop, continuation=bool(rc.continuation), seed=args.seed)
    diag.summary.pop("wall_time", None)  # keep outputs reproducible
    log.info("finished after %d iterations", diag.summary["iterations"])

    prefix = _prefix(args.out)
    out = io.AtomicOutputs()
    out.add_text(_with_suffix(prefix, ".placement.json"), io.json_text({"centers": c, "summary": diag.summary}))
    out.add_text(_with_suffix(prefix, ".diag.csv"), io.csv_text(DIAG_COLUMNS, diag.rows()))
    out.add_writer(_with_suffix(prefix, ".layout.svg"), lambda p: plotting.layout_figure(design, c, p, "svg"))
    out.add_writer(_with_suffix(prefix, ".convergence.png"), lambda p: plotting.diagnostics_figure(diag, p, "png"))
    for p in out.commit():
        print(p)
    return EXIT_OK


def cmd_verify(args) -> int:
    rc = io.load_config(args.config)
    design, c0 = _design_and_start(args.design, args.seed)
    check_density(design)
    grid = _grid(args, rc, design.width, design.height, 128)
    report = run_battery(design, c0, _epsilon(rc, design), grid, N=int(rc.N), seed=args.seed)
    text = io.json_text(report)
    if args.out:
        out = io.AtomicOutputs()
        out.add_text(args.out, text)
        out.commit()
    else:
        sys.stdout.write(text)
    for name in report["failed"]:
        print(f"check failed: {name}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _input_field(args, rc) -> tuple[ScalarField, float]:
    """Density (or zero-mean field) from a CSV, or the mollified density of a design."""
    src = Path(args.input)
    if src.suffix.lower() == ".csv":
        fld = io.read_field_csv(src)
        return fld, fld.mean()
    design, c = _design_and_start(src, args.seed)
    check_density(design)
    grid = _grid(args, rc, design.width, design.height, 256)
    eps = _epsilon(rc, design)
    _objective(rc, design, grid).validate(design)
    return density(design, c, eps, grid), design.mean_density


def cmd_spectrum(args) -> int:
    rc = io.load_config(args.config)
    fld, mean = _input_field(args, rc)
    f = residual(fld, mean)
    N = int(args.modes if args.modes is not None else rc.N)
    rep = spectral_report(f, N)
    table = spectral.spectrum_table(f)  # zero mode first, then ascending
    shown = table[1 : N + 1]
    total = float(sum(r["alpha"] ** 2 for r in table))
    rel = abs(total - rep.Var) / rep.Var if rep.Var > 0 else abs(total)
    cols = ("k", "l", "lambda_discrete", "lambda_continuum", "alpha")
    footer = [f"parseval sum_alpha2={total!r} Var={rep.Var!r} rel_err={rel!r}"]

    prefix = _prefix(args.out)
    out = io.AtomicOutputs()
    out.add_text(prefix, io.csv_text(cols, ([r[c] for c in cols] for r in shown), footer))
    out.add_text(prefix.with_suffix(".report.json"), io.json_text(rep.to_dict()))
    out.add_writer(prefix.with_suffix(".png"), lambda p: plotting.spectrum_figure(table, p, "png"))
    for p in out.commit():
        print(p)
    return EXIT_OK


def cmd_flow(args) -> int:
    rc = io.load_config(args.config)
    rho, _ = _input_field(args, rc)
    try:
        fcfg = FlowConfig(rho.grid, float(rc.cfl), float(rc.t_end), int(rc.record_every), rc.max_steps)
    except ValueError as exc:
        raise io.InputError(str(exc)) from exc

    prefix = _prefix(args.out)
    out = io.AtomicOutputs()
    heat = None
    if args.compare_heat:
        cmp = heat_flow_compare(rho, fcfg)
        res, heat = cmp.wgf, cmp.heat
        out.add_text(_with_suffix(prefix, ".heat.ledger.csv"), io.csv_text(LEDGER_COLUMNS, heat.ledger))
        out.add_text(
            _with_suffix(prefix, ".compare.json"),
            io.json_text(
                {
                    "wgf_half_life": cmp.wgf_half_life,
                    "heat_half_life": cmp.heat_half_life,
                    "wgf_imbalance": cmp.wgf_imbalance,
                    "heat_imbalance": cmp.heat_imbalance,
                }
            ),
        )
    else:
        res = wgf_run(rho, fcfg)
    out.add_text(_with_suffix(prefix, ".ledger.csv"), io.csv_text(LEDGER_COLUMNS, res.ledger))
    for j, (_, snap) in enumerate(res.snapshots):
        out.add_text(_with_suffix(prefix, f".snap_{j:04d}.csv"), io.field_csv(snap))
    out.add_writer(_with_suffix(prefix, ".ledger.png"), lambda p: plotting.flow_figure(res, p, heat, "png"))
    for p in out.commit():
        print(p)
    return EXIT_OK


# --- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker cap for the FFT backend")
    common.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"), help="override the grid size")
    common.add_argument("--config", help="flat JSON run configuration")

    parser = argparse.ArgumentParser(prog="pefplan", description="Poisson-energy floorplanning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", parents=[common], help="run projected gradient descent")
    p.add_argument("design")
    p.add_argument("-o", "--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    p.add_argument("design")
    p.add_argument("-o", "--out", help="report path (default: standard output)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", parents=[common], help="spectral report and per-mode CSV")
    p.add_argument("input", help="design JSON or x,y,value field CSV")
    p.add_argument("-N", "--modes", type=int, help="number of lowest modes listed")
    p.add_argument("-o", "--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("flow", parents=[common], help="Poisson transport flow simulation")
    p.add_argument("input", help="design JSON or x,y,value density CSV")
    p.add_argument("-o", "--out", required=True, help="output prefix")
    p.add_argument("--compare-heat", action="store_true", help="also run the heat flow")
    p.set_defaults(func=cmd_flow)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    spectral.set_workers(args.threads)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
