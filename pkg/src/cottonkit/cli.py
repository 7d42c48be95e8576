"""Command-line surface and machine-readable reporting.

Commands: verify, report, solve, lift, cotton, killing, killing-dim,
catalog.  Exit codes: 0 when every check passes, 1 when any check fails,
2 for configuration or parse errors.  JSON output is deterministic; with
--stable-output the wall-time field is dropped so identical runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import catalog as cat
from .exprlang import ExprSyntaxError, eval_array, parse_expr
from .geometry import (
    GeometryError,
    cotton_grid,
    cotton_identities_check,
    load_metric,
)
from .kink import (
    KinkSolverError,
    PotentialSpec,
    flat_kink_solve,
    lift_flat_kink,
    solve_kink_ode,
)
from .report import CheckReport, make_report, reports_to_json
from .suite import CHECK_NAMES, TOL, run_checks
from .symmetry import (
    VectorFieldSpec,
    killing_dimension,
    killing_residual,
)

__all__ = ["main", "RunConfig"]

_FORMATS = ("json", "text", "csv")

_CONFIG_KEYS = {
    "C",
    "tol",
    "checks",
    "cases",
    "grid_n",
    "format",
    "out",
    "thorough",
    "stable_output",
}


@dataclass
class RunConfig:
    """Verification run configuration; unknown keys are rejected."""

    C: float = 1.0
    tol: Optional[float] = None
    checks: Optional[list] = None
    cases: Optional[list] = None
    grid_n: int = 7
    format: str = "json"
    out: Optional[str] = None
    thorough: bool = False
    stable_output: bool = False

    def __post_init__(self):
        if self.format not in _FORMATS:
            raise ValueError(f"format must be one of {_FORMATS}")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")

    @staticmethod
    def from_dict(obj: dict) -> "RunConfig":
        unknown = set(obj) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**obj)

    def to_dict(self) -> dict:
        return asdict(self)


class _CliError(Exception):
    pass


def _emit_reports(reports: list[CheckReport], config: RunConfig) -> int:
    if config.format == "text":
        body = "\n".join(r.line() for r in sorted(reports, key=lambda r: (r.check_id, r.case or ""))) + "\n"
    elif config.format == "csv":
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "case", "max_residual", "tolerance", "passed"])
        for r in sorted(reports, key=lambda r: (r.check_id, r.case or "")):
            w.writerow([r.check_id, r.case or "", repr(r.max_residual), repr(r.tolerance), r.passed])
        body = buf.getvalue()
    else:
        cfg_dict = config.to_dict()
        cfg_dict.pop("out", None)  # self-referential, breaks byte-stable output
        body = reports_to_json(reports, config=cfg_dict, stable=config.stable_output) + "\n"
    if config.out:
        Path(config.out).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    return 0 if all(r.passed for r in reports) else 1


def _config_from_args(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
        cfg = RunConfig.from_dict(base)
    else:
        cfg = RunConfig()
    if args.C is not None:
        cfg.C = args.C
    if args.tol is not None:
        cfg.tol = args.tol
    if getattr(args, "what", None):
        cfg.checks = [w.strip() for w in args.what.split(",") if w.strip()]
    if getattr(args, "case", None) and args.case != "all":
        cfg.cases = [cat.canonical_tag(c) for c in args.case.split(",")]
    if args.grid is not None:
        cfg.grid_n = args.grid
    if args.format is not None:
        cfg.format = args.format
    if args.out is not None:
        cfg.out = args.out
    cfg.thorough = bool(getattr(args, "thorough", False))
    cfg.stable_output = bool(getattr(args, "stable_output", False))
    return cfg


def _apply_tol_override(reports: list[CheckReport], tol: Optional[float]) -> list[CheckReport]:
    if tol is None:
        return reports
    out = []
    for r in reports:
        r.tolerance = tol
        r.passed = r.max_residual <= tol
        out.append(r)
    return out


# -- commands ---------------------------------------------------------------------


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    reports = run_checks(
        C=cfg.C,
        checks=cfg.checks,
        cases=cfg.cases,
        thorough=cfg.thorough,
        grid_n=cfg.grid_n,
    )
    reports = _apply_tol_override(reports, cfg.tol)
    return _emit_reports(reports, cfg)


def cmd_report(args) -> int:
    cfg = _config_from_args(args)
    outdir = Path(cfg.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    reports = run_checks(C=cfg.C, thorough=cfg.thorough, grid_n=cfg.grid_n)
    reports = _apply_tol_override(reports, cfg.tol)
    (outdir / "report.json").write_text(
        reports_to_json(reports, config=cfg.to_dict(), stable=cfg.stable_output) + "\n",
        encoding="utf-8",
    )
    _write_kink_profile_csv(outdir / "kink_profile.csv", cfg.C)
    if cfg.format == "text":
        for r in sorted(reports, key=lambda r: (r.check_id, r.case or "")):
            print(r.line())
    failed = sum(0 if r.passed else 1 for r in reports)
    print(f"report.json + kink_profile.csv written to {outdir} ({failed} failed checks)")
    return 0 if failed == 0 else 1


def _write_kink_profile_csv(path: Path, C: float) -> None:
    """Numerical profile columns plus the closed-form curvature curves
    (exact-jet evaluation of the catalog kink) for plotting."""
    root = math.sqrt(C)
    prof = solve_kink_ode(C, 8.0 / root, n=401, tol=1e-7)
    case = cat.SolutionCase("kink+", C)
    sol2 = cat.solution_2d(case)
    sol3 = cat.solution_3d(case)
    r_curve = eval_array(sol2.r_expected, {"x": prof.x, **case.env})
    R_curve = eval_array(sol3.R_expected, {"x": prof.x, **case.env})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "h", "r", "R", "residual_eq14", "first_integral"])
        for k in range(len(prof.x)):
            w.writerow(
                [
                    repr(float(prof.x[k])),
                    repr(float(prof.f[k])),
                    repr(float(prof.h[k])),
                    repr(float(r_curve[k])),
                    repr(float(R_curve[k])),
                    repr(float(prof.eq14_residual[k])),
                    repr(float(prof.first_integral[k])),
                ]
            )


def cmd_solve(args) -> int:
    if args.system != "kink":
        raise _CliError(f"unknown system {args.system!r}; only 'kink' is available")
    prof = solve_kink_ode(args.C, args.xmax, n=args.n, tol=args.tol)
    out = args.out or "profile.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f", "h", "residual_eq14", "first_integral"])
        for row in prof.csv_rows():
            w.writerow([repr(float(v)) for v in row])
    print(
        f"{out}: {len(prof.x)} rows; f'(0) = {prof.shoot_param!r}, "
        f"{prof.iterations} bisections, max |eq14| = {prof.max_residual:.3e}"
    )
    return 0


def cmd_lift(args) -> int:
    vac = [float(v) for v in args.vacua.split(",")]
    if len(vac) != 2:
        raise _CliError("--vacua expects two comma-separated numbers")
    p = PotentialSpec(expr=parse_expr(args.potential), var=args.var, vacua=(vac[0], vac[1]))
    flat = flat_kink_solve(p, xmax=args.xmax, n=args.n)
    lifted = lift_flat_kink(p, flat)
    out = args.out or "lift.csv"
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "k", "f", "g_tt"])
        for k in range(len(lifted.x)):
            w.writerow(
                [
                    repr(float(lifted.x[k])),
                    repr(float(flat(lifted.x[k] / math.sqrt(2.0)))),
                    repr(float(lifted.f[k])),
                    repr(float(lifted.g_tt[k])),
                ]
            )
    print(f"{out}: {len(lifted.x)} rows; k(0) = {flat.center_value!r}")
    return 0


def _parse_grid_spec(spec: str, coords: Sequence[str]) -> np.ndarray:
    """Axis specs like 't=0.5:4:5,x=0.25:4:5,y=-1:1:5'; 'default' covers a
    box that dodges the catalog singular loci."""
    if spec == "default":
        axes = {}
        for c in coords:
            axes[c] = np.linspace(-1.0, 1.0, 5) if c == "y" else np.linspace(0.6, 2.4, 5)
    else:
        axes = {}
        for part in spec.split(","):
            name, rng = part.split("=")
            lo, hi, n = rng.split(":")
            axes[name.strip()] = np.linspace(float(lo), float(hi), int(n))
        missing = set(coords) - set(axes)
        if missing:
            raise _CliError(f"grid spec missing axes: {sorted(missing)}")
    mesh = np.meshgrid(*[axes[c] for c in coords], indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def cmd_cotton(args) -> int:
    m = load_metric(args.metric)
    grid = _parse_grid_spec(args.grid, m.coords)
    tol = args.tol if args.tol is not None else TOL["cotton"]
    data = cotton_grid(m, grid)
    resid = np.max(np.abs(data["cotton"]), axis=(0, 1)) / data["scale"]
    worst = int(np.argmax(resid))
    vanishing = make_report(
        check_id="cotton",
        max_residual=float(resid[worst]),
        tolerance=tol,
        grid=f"{len(grid)} points",
        params=dict(m.env),
        worst_point=list(map(float, grid[worst])),
    )
    identities = cotton_identities_check(m, grid, tolerance=args.tol or TOL["cotton-identities"])
    cfg = RunConfig(format=args.format or "json", out=args.out, stable_output=args.stable_output)
    return _emit_reports([vanishing, identities], cfg)


def cmd_killing(args) -> int:
    m = load_metric(args.metric)
    with open(args.fields, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    unknown = set(payload) - {"coordinates", "parameters", "fields"}
    if unknown:
        raise _CliError(f"unknown fields-file keys: {sorted(unknown)}")
    grid = _parse_grid_spec(args.grid, m.coords)
    tol = args.tol if args.tol is not None else TOL["killing"]
    reports = []
    for k, comps in enumerate(payload["fields"]):
        xi = VectorFieldSpec.parse(comps)
        reports.append(
            killing_residual(m, xi, grid, tolerance=tol, check_id=f"killing:field{k}")
        )
    cfg = RunConfig(format=args.format or "json", out=args.out, stable_output=args.stable_output)
    return _emit_reports(reports, cfg)


def cmd_killing_dim(args) -> int:
    m = load_metric(args.metric)
    base = tuple(float(v) for v in args.point.split(","))
    if len(base) != m.dim:
        raise _CliError(f"--point needs {m.dim} components")
    rng = np.random.default_rng(2)
    pts = [base] + [tuple(np.asarray(base) + rng.uniform(-0.15, 0.15, m.dim)) for _ in range(2)]
    est = killing_dimension(m, pts, depth=args.depth)
    print(json.dumps({"killing_dimension": est, "depth": args.depth, "points": [list(p) for p in pts]}))
    return 0


def cmd_catalog(args) -> int:
    if args.action != "export":
        raise _CliError("catalog supports only the 'export' action")
    case = cat.SolutionCase(args.case, -abs(args.C) if cat.canonical_tag(args.case) == "b" else abs(args.C))
    payload = cat.export_case(case, args.what)
    body = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    return 0


# -- parser -----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--C", type=float, default=None, help="coupling constant (default 1.0)")
    p.add_argument("--tol", type=float, default=None, help="tolerance override for all checks")
    p.add_argument("--grid", type=int, default=None, help="points per grid axis")
    p.add_argument("--format", choices=_FORMATS, default=None)
    p.add_argument("--out", default=None, help="output path (stdout by default)")
    p.add_argument("--thorough", action="store_true", help="repeat case checks at C = 0.25 and 9")
    p.add_argument("--stable-output", action="store_true", dest="stable_output",
                   help="omit wall-time so identical runs are byte-identical")
    p.add_argument("--config", default=None, help="JSON config file (strict keys)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cottonkit",
        description="Numerical verification toolkit for the reduced "
        "connection-functional gravity model and its kink solutions.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run named checks and report pass/fail")
    _add_common(p)
    p.add_argument("--case", default="all", help=f"case tag(s), comma separated ({', '.join(cat.CASE_TAGS)})")
    p.add_argument("--what", default=None, help=f"checks to run, comma separated ({', '.join(CHECK_NAMES)})")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("report", help="full default suite + report.json + profile CSVs")
    _add_common(p)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("solve", help="shooting solution of the static-gauge kink system")
    p.add_argument("system", choices=["kink"])
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--xmax", type=float, default=8.0)
    p.add_argument("--n", type=int, default=801)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("lift", help="flat kink by quadrature, lifted to curved data")
    p.add_argument("--potential", required=True, help='e.g. "(phi^2-1)^2/4"')
    p.add_argument("--var", default="phi")
    p.add_argument("--vacua", required=True, help="two comma-separated roots of V")
    p.add_argument("--xmax", type=float, default=8.0)
    p.add_argument("--n", type=int, default=401)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("cotton", help="Cotton vanishing + identities for a metric file")
    p.add_argument("--metric", required=True)
    p.add_argument("--grid", default="default")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=_FORMATS, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--stable-output", action="store_true", dest="stable_output")
    p.set_defaults(fn=cmd_cotton)

    p = sub.add_parser("killing", help="Killing residuals of fields against a metric")
    p.add_argument("--metric", required=True)
    p.add_argument("--fields", required=True)
    p.add_argument("--grid", default="default")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=_FORMATS, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--stable-output", action="store_true", dest="stable_output")
    p.set_defaults(fn=cmd_killing)

    p = sub.add_parser("killing-dim", help="pointwise Killing-algebra dimension estimate")
    p.add_argument("--metric", required=True)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--depth", type=int, default=2)
    p.set_defaults(fn=cmd_killing_dim)

    p = sub.add_parser("catalog", help="export catalog data as JSON")
    p.add_argument("action", choices=["export"])
    p.add_argument("--case", required=True)
    p.add_argument("--what", required=True, choices=["metric2d", "metric3d", "transform", "killing"])
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_catalog)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (
        _CliError,
        ExprSyntaxError,
        GeometryError,
        ValueError,
        OSError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KinkSolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
