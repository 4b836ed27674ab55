"""
Command-line front end: subcommand dispatch, family JSON ingestion, CSV/JSON
emission and exit codes (0 success, 1 validation, 2 numerical failure).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import pandas as pd
from tabulate import tabulate

from src.baselines import run_comparison
from src.basin_scan import GridSpec, estimate_rate, scan
from src.core import NumericConfig, ProductPoint
from src.dr_engine import iterate
from src.errors import DrZeroError, ValidationError
from src.functions import FunctionModel
from src.graph_projection import project_graph
from src.io import (
    load_family,
    load_json_object,
    save_dataframe_to_csv,
    to_csv_text,
    to_json_text,
    write_text,
)
from src.lyapunov import check_trajectory
from src.stability import stability_report
from src.verify import verify_all

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "solve",
    "project",
    "stability",
    "lyapunov",
    "compare",
    "basin",
    "rate",
    "verify-all",
)
FORMATS = {
    "solve": ("csv", "json"),
    "project": ("json", "csv"),
    "stability": ("json",),
    "lyapunov": ("csv", "json"),
    "compare": ("json", "csv", "table"),
    "basin": ("csv", "json"),
    "rate": ("json",),
    "verify-all": ("table",),
}
DUMP_LIMIT = 100
SHARED_FLAGS = {
    "subcommand", "family_json", "config", "output", "format", "seed", "verbose",
    "tol", "solver_tol", "max_iter", "grid_points", "refine_tol",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ValidationError(message)


def _floats(text: str, name: str, count: int | None = None) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(
            f"{name} must be a comma-separated list of numbers, got {text!r}"
        ) from e
    if not values or (count is not None and len(values) != count):
        expected = count or "at least one"
        raise ValidationError(f"{name} expects {expected} value(s), got {text!r}")
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"{name} must be finite, got {text!r}")
    return values


@dataclass
class RunConfig:
    subcommand: str
    family_json: str | None
    numeric: NumericConfig
    output: str | None
    format: str
    seed: int = 0
    options: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> RunConfig:
        """Validate flags before any computation."""
        allowed = FORMATS[ns.subcommand]
        fmt = ns.format or allowed[0]
        if fmt not in allowed:
            raise ValidationError(
                f"--format {fmt} is not available for {ns.subcommand}; "
                f"choose from {allowed}"
            )
        numeric = NumericConfig()
        if ns.config:
            numeric = NumericConfig.from_dict(load_json_object(ns.config))
        # basin keeps --tol for the target distance; solver tolerances use --solver-tol
        basin = ns.subcommand == "basin"
        solver_tol = getattr(ns, "solver_tol" if basin else "tol", None)
        changes: dict[str, Any] = {}
        if solver_tol is not None:
            changes.update(step_tolerance=solver_tol, residual_tolerance=solver_tol)
        if getattr(ns, "max_iter", None) is not None:
            changes["max_iterations"] = ns.max_iter
        if getattr(ns, "grid_points", None) is not None:
            changes["projection_grid_points"] = ns.grid_points
        if getattr(ns, "refine_tol", None) is not None:
            changes["projection_refine_tolerance"] = ns.refine_tol
        if changes:
            numeric = replace(numeric, **changes)
        family = getattr(ns, "family_json", None)
        if ns.subcommand != "verify-all" and not family:
            raise ValidationError(f"{ns.subcommand} requires --family-json")
        shared = SHARED_FLAGS - {"tol"} if basin else SHARED_FLAGS
        options = {k: v for k, v in vars(ns).items() if k not in shared}
        return cls(ns.subcommand, family, numeric, ns.output, fmt, ns.seed, options)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="drzero", description="Douglas-Rachford zero finding for f: R^n -> R"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def command(
        name: str,
        help_text: str,
        family: bool = True,
        tol_help: str = "Step and residual tolerance",
    ) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if family:
            p.add_argument(
                "--family-json", help="Family JSON object or path to a JSON file"
            )
        p.add_argument("--config", help="NumericConfig JSON object or path")
        p.add_argument("--tol", type=float, help=tol_help)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--grid-points", type=int, help="Projection scan points")
        p.add_argument(
            "--refine-tol", type=float, help="Projection refinement tolerance"
        )
        p.add_argument("--output", help="Write the payload here instead of stdout")
        p.add_argument("--format", help="Payload format: csv, json or table")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--verbose", action="store_true")
        return p

    p = command("solve", "Run the DR iteration")
    p.add_argument("--x0", required=True)
    p.add_argument("--rho0", type=float, default=0.0)
    p.add_argument("--selection", choices=("first", "nearest"), default="first")

    p = command("project", "Project (x, rho) onto the graph of f")
    p.add_argument("--x", required=True)
    p.add_argument("--rho", type=float, default=0.0)

    p = command("stability", "Stability report at a fixed point")
    p.add_argument("--xbar", required=True)
    p.add_argument("--rhobar", type=float, default=0.0)

    p = command("lyapunov", "Check the Lyapunov certificate along a DR trajectory")
    p.add_argument("--x0", required=True)
    p.add_argument("--rho0", type=float, default=0.0)
    p.add_argument("--verdict", help="Also write the JSON verdict here (csv format)")

    p = command("compare", "Run DR, MAP and Newton from one start")
    p.add_argument("--x0", required=True)
    p.add_argument("--rho0", type=float, default=0.0)

    p = command(
        "basin",
        "Scan a grid of starting points",
        tol_help="Distance to the zero that counts as solved",
    )
    p.add_argument("--x-range", default="-10,10")
    p.add_argument("--rho-range", default="-10,10")
    p.add_argument("--resolution", default="101,101")
    p.add_argument("--solver-tol", type=float, help="Step and residual tolerance")
    p.add_argument("--threads", type=int)
    p.add_argument("--dump-trajectories", help="Directory for per-cell trajectory CSVs")
    p.add_argument("--dump-limit", type=int, default=DUMP_LIMIT)

    p = command("rate", "Estimate Q/R-linear rates along a DR trajectory")
    p.add_argument("--x0", required=True)
    p.add_argument("--rho0", type=float, default=0.0)
    p.add_argument("--target-x", help="Limit x (defaults to the nearest known zero)")
    p.add_argument("--target-rho", type=float, default=0.0)

    p = command("verify-all", "Run the acceptance suite", family=False)
    p.add_argument(
        "--quick", action="store_true", help="Reduced grids and sample counts"
    )
    return parser


def _emit(text: str, output: str | None) -> None:
    if output:
        write_text(text, output)
    else:
        sys.stdout.write(text)


def _start(m: FunctionModel, opts: dict[str, Any]) -> ProductPoint:
    return ProductPoint.of(_floats(opts["x0"], "--x0", m.dimension), opts["rho0"])


def _solve(cfg: RunConfig, m: FunctionModel) -> str:
    traj = iterate(m, _start(m, cfg.options), cfg.numeric, cfg.options["selection"])
    if cfg.format == "csv":
        return to_csv_text(traj.to_frame())
    return to_json_text(traj.to_dict())


def _project(cfg: RunConfig, m: FunctionModel) -> str:
    x = _floats(cfg.options["x"], "--x", m.dimension)
    projections = project_graph(m, x, cfg.options["rho"], cfg.numeric)
    if cfg.format == "json":
        return to_json_text([p.to_dict() for p in projections])
    rows = []
    for proj in projections:
        row = {
            f"p_{j + 1}" if m.dimension > 1 else "p": float(v)
            for j, v in enumerate(proj.p)
        }
        row.update(
            fp=proj.fp,
            squared_distance=proj.squared_distance,
            multivalued=proj.multivalued,
            certificate_residual=proj.certificate_residual,
        )
        rows.append(row)
    return to_csv_text(pd.DataFrame(rows))


def _stability(cfg: RunConfig, m: FunctionModel) -> str:
    xbar = _floats(cfg.options["xbar"], "--xbar", m.dimension)
    zbar = ProductPoint.of(xbar, cfg.options["rhobar"])
    return to_json_text(stability_report(m, zbar).to_dict())


def _lyapunov(cfg: RunConfig, m: FunctionModel) -> str:
    cert = check_trajectory(m, iterate(m, _start(m, cfg.options), cfg.numeric))
    if cfg.format == "json":
        steps = cert.to_frame().to_dict(orient="records")
        return to_json_text({"certificate": cert.to_dict(), "steps": steps})
    if cfg.options.get("verdict"):
        write_text(to_json_text(cert.to_dict()), cfg.options["verdict"])
    return to_csv_text(cert.to_frame())


def _compare(cfg: RunConfig, m: FunctionModel) -> str:
    report = run_comparison(m, _start(m, cfg.options), cfg.numeric)
    if cfg.format == "table":
        headers = ["method", "verdict", "iterations", "x", "rho"]
        return tabulate(report.rows(), headers=headers, tablefmt="github") + "\n"
    if cfg.format == "csv":
        frames = []
        runs = (("DR", report.dr), ("MAP", report.map), ("Newton", report.newton))
        for name, traj in runs:
            frame = traj.to_frame()
            frame.insert(0, "method", name)
            frames.append(frame)
        return to_csv_text(pd.concat(frames, ignore_index=True))
    return to_json_text(report.to_dict())


def _basin(cfg: RunConfig, m: FunctionModel) -> str:
    opts = cfg.options
    nx, nrho = (int(v) for v in _floats(opts["resolution"], "--resolution", 2))
    spec = GridSpec(
        tuple(_floats(opts["x_range"], "--x-range", 2)),  # type: ignore[arg-type]
        tuple(_floats(opts["rho_range"], "--rho-range", 2)),  # type: ignore[arg-type]
        (nx, nrho),
        opts["tol"] if opts["tol"] is not None else GridSpec.tol,
    )
    keep = opts["dump_limit"] if opts.get("dump_trajectories") else 0
    grid = scan(
        m, spec, cfg.numeric, threads=opts.get("threads"), keep_trajectories=keep
    )
    if opts.get("dump_trajectories"):
        folder = Path(opts["dump_trajectories"])
        try:
            folder.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ValidationError(f"Cannot create {folder}: {e}") from e
        for (i, j), traj in grid.trajectories.items():
            path = folder / f"cell_{i:04d}_{j:04d}.csv"
            save_dataframe_to_csv(traj.to_frame(), str(path))
    frame = grid.to_frame()
    if cfg.format == "json":
        cleaned = frame.astype(object).where(frame.notna(), None)
        return to_json_text(cleaned.to_dict(orient="records"))
    return to_csv_text(frame)


def _rate(cfg: RunConfig, m: FunctionModel) -> str:
    opts = cfg.options
    z0 = _start(m, opts)
    if opts.get("target_x"):
        target_x = _floats(opts["target_x"], "--target-x", m.dimension)
        target = ProductPoint.of(target_x, opts["target_rho"])
    else:
        zeros = m.known_zeros
        if not zeros:
            raise ValidationError(
                "--target-x is required for a family without known zeros"
            )
        nearest = min(zeros, key=lambda z: float(((z - z0.x) ** 2).sum()))
        target = ProductPoint(nearest, opts["target_rho"])
    traj = iterate(m, z0, cfg.numeric)
    return to_json_text(estimate_rate(traj, target, cfg.numeric).to_dict())


HANDLERS = {
    "solve": _solve,
    "project": _project,
    "stability": _stability,
    "lyapunov": _lyapunov,
    "compare": _compare,
    "basin": _basin,
    "rate": _rate,
}


def dispatch(cfg: RunConfig) -> int:
    """Run one subcommand; the payload goes to cfg.output or stdout."""
    if cfg.subcommand == "verify-all":
        report, passed = verify_all(cfg.seed, quick=bool(cfg.options.get("quick")))
        _emit(report, cfg.output)
        return 0 if passed else 2
    m = load_family(cfg.family_json or "")
    _emit(HANDLERS[cfg.subcommand](cfg, m), cfg.output)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    verbose = "--verbose" in argv
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = RunConfig.from_args(build_parser().parse_args(argv))
        return dispatch(cfg)
    except DrZeroError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        return e.exit_code
