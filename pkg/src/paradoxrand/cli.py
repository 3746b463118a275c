"""Command-line front end.

    paradoxrand sweep     --family hardy --min 0 --max 0.09017 --points 25
    paradoxrand bound     --family chsh --param 2.0
    paradoxrand lhv       --family noisy-hardy --param 0.3333
    paradoxrand qubit-opt --family cabello --seed 7
    paradoxrand verify    [--level 2]

Exit codes: 0 success, 1 usage error, 2 infeasible, 3 solver failure,
4 no feasible qubit point.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import acceptance, lhv_oracle, qubit_lab
from .npa import normalize_level
from .protocols import (
    FAMILIES,
    RANGES,
    CertificationResult,
    ProtocolInfeasible,
    ProtocolSolverFailure,
    build,
    certify,
    sweep,
)
from .sdp_core import GAP_TOL, SolverFailure, Status

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_NO_QUBIT = 0, 1, 2, 3, 4
COLUMNS = ("param", "p_guess", "h_min", "lhv", "qubit_lower", "status", "gap", "level")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


# --------------------------------------------------------------------------
# formatting


def fmt(v) -> str:
    """9 significant digits, '.' decimal, empty for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def jnum(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.9g}")
    return v


def row_of(r: CertificationResult) -> dict:
    return {
        "param": r.parameter,
        "p_guess": r.p_guess,
        "h_min": r.h_min,
        "lhv": r.lhv_baseline,
        "qubit_lower": r.qubit_lower,
        "status": r.status,
        "gap": r.gap,
        "level": r.npa_level,
    }


def to_csv(rows: Sequence[dict], columns: Sequence[str] = COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()


def to_svg(xs, ys, xlabel: str, ylabel: str, title: str = "", width=480, height=320) -> str:
    """Minimal line plot: polyline, axes, five ticks per axis, labels."""
    pts = [(float(x), float(y)) for x, y in zip(xs, ys) if y is not None and not math.isnan(y)]
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb
    x0, x1 = (min(p[0] for p in pts), max(p[0] for p in pts)) if pts else (0.0, 1.0)
    y0, y1 = (min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)) if pts else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda x: ml + pw * (x - x0) / (x1 - x0)  # noqa: E731
    sy = lambda y: mt + ph * (1.0 - (y - y0) / (y1 - y0))  # noqa: E731
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for t in np.linspace(x0, x1, 5):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in np.linspace(y0, y1, 5):
        Y = sy(t)
        out.append(f'<line x1="{ml - 4}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{Y + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    if pts:
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {mt + ph / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# config


def check_config(args) -> None:
    if getattr(args, "points", 1) < 1:
        raise UsageError("--points must be >= 1")
    lo, hi = getattr(args, "min", None), getattr(args, "max", None)
    if lo is not None and hi is not None and lo > hi:
        raise UsageError("--min must not exceed --max")
    if getattr(args, "gap_tol", 1.0) <= 0:
        raise UsageError("--gap-tol must be positive")
    if getattr(args, "workers", 1) < 1:
        raise UsageError("--workers must be >= 1")
    if getattr(args, "restarts", 1) < 1:
        raise UsageError("--restarts must be >= 1")


def grid_of(args) -> np.ndarray:
    lo_default, hi_default = RANGES[args.family]
    lo = lo_default if args.min is None else args.min
    hi = hi_default if args.max is None else args.max
    if lo > hi:
        raise UsageError("--min must not exceed --max")
    return np.linspace(lo, hi, args.points)


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def config_argv(sub: argparse.ArgumentParser, cfg: dict[str, str]) -> list[str]:
    """Turn config entries into flags placed before the user's own, so the
    command line wins (argparse keeps the last occurrence)."""
    argv = []
    for key, value in cfg.items():
        action = sub._option_string_actions.get("--" + key)
        if action is None:
            raise UsageError(f"config key {key!r} is not an option of this command")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append("--" + key)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects a boolean")
        else:
            argv += ["--" + key, value]
    return argv


# --------------------------------------------------------------------------
# commands


def cmd_sweep(args) -> int:
    grid = grid_of(args)
    results = sweep(
        args.family, grid, args.level, workers=args.workers, gap_tol=args.gap_tol,
        qubit=args.qubit, qubit_restarts=args.restarts,
    )  # fmt: skip
    emit(to_csv([row_of(r) for r in results]), args.out)
    if args.plot:
        xs = [r.parameter for r in results]
        ys = [r.h_min for r in results]
        Path(args.plot).write_text(to_svg(xs, ys, "parameter", "H_min (bits)", f"{args.family}, level {args.level}"))
    statuses = {r.status for r in results}
    if Status.SOLVER_FAILURE.value in statuses:
        return EXIT_SOLVER
    if statuses == {Status.INFEASIBLE.value}:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.param is None:
        raise UsageError("bound needs --param")
    level = normalize_level(args.level)
    try:
        spec = build(args.family, args.param, level)
        r = certify(spec, level, gap_tol=args.gap_tol, qubit=args.qubit, qubit_restarts=args.restarts)
    except ProtocolInfeasible:
        r = CertificationResult(args.family, args.param, Status.INFEASIBLE.value, npa_level=level)
    except ProtocolSolverFailure:
        r = CertificationResult(args.family, args.param, Status.SOLVER_FAILURE.value, npa_level=level)
    doc = {k: jnum(v) for k, v in row_of(r).items()}
    doc["per_outcome"] = {k: jnum(v) for k, v in r.per_outcome.items()}
    emit(json.dumps(doc, indent=2) + "\n", args.out)
    if r.status == Status.INFEASIBLE.value:
        return EXIT_INFEASIBLE
    if r.status != Status.OPTIMAL.value:
        return EXIT_SOLVER
    return EXIT_OK


def _lhv_point(family: str, param: float | None) -> dict:
    from .protocols import figure_of_merit

    merit, cons = figure_of_merit(family, param)
    try:
        res = lhv_oracle.lhv_optimize(merit, cons)
        return {"param": param, "lhv": res.value, "status": Status.OPTIMAL.value, "weights": res.model.weights}
    except lhv_oracle.Infeasible:
        return {"param": param, "lhv": None, "status": Status.INFEASIBLE.value, "weights": None}
    except SolverFailure:
        return {"param": param, "lhv": None, "status": Status.SOLVER_FAILURE.value, "weights": None}


def cmd_lhv(args) -> int:
    """Classical optimum of the family's figure of merit: JSON for one point
    (noisy-hardy needs --param; other families ignore it), CSV for a grid."""
    if args.family == "noisy-hardy" and args.param is None:
        rows = [_lhv_point(args.family, float(e)) for e in grid_of(args)]
        emit(to_csv(rows, ("param", "lhv", "status")), args.out)
    else:
        row = _lhv_point(args.family, args.param if args.family == "noisy-hardy" else None)
        doc = {"family": args.family, "param": jnum(args.param), "lhv": jnum(row["lhv"]), "status": row["status"]}
        if row["weights"] is not None:
            doc["weights"] = {
                str(d): jnum(w) for d, w in zip(lhv_oracle.VERTICES, row["weights"]) if w > 1e-12
            }  # fmt: skip
        emit(json.dumps(doc, indent=2) + "\n", args.out)
        rows = [row]
    statuses = {r["status"] for r in rows}
    if Status.SOLVER_FAILURE.value in statuses:
        return EXIT_SOLVER
    if statuses == {Status.INFEASIBLE.value}:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_qubit_opt(args) -> int:
    if args.family == "noisy-hardy" and args.param is None:
        raise UsageError("noisy-hardy needs --param (the noise level)")
    param = args.param if args.family == "noisy-hardy" else None
    try:
        opt = qubit_lab.optimize(args.family, restarts=args.restarts, seed=args.seed, parameter=param, workers=args.workers)
    except qubit_lab.NoFeasiblePoint as exc:
        print(f"no feasible qubit point: {exc}", file=sys.stderr)
        return EXIT_NO_QUBIT
    emit(qubit_lab.dumps(opt) + "\n", args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    settings = acceptance.Settings(
        gap_tol=args.gap_tol, qubit_restarts=args.restarts, seed=args.seed, level=normalize_level(args.level)
    )
    lines = []

    def echo(line):
        lines.append(line)
        print(line, flush=True)

    checks = acceptance.run(settings, echo=echo)
    passed = sum(c.passed for c in checks)
    echo(f"{passed}/{len(checks)} criteria passed")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK if passed == len(checks) else EXIT_SOLVER


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="paradoxrand", description="Device-independent randomness from Hardy-type paradoxes.")
    subs = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, family=True):
        if family:
            p.add_argument("--family", required=True, choices=FAMILIES)
            p.add_argument("--param", type=float)
            p.add_argument("--min", type=float)
            p.add_argument("--max", type=float)
            p.add_argument("--points", type=int, default=25)
        p.add_argument("--level", type=normalize_level, default="1+AB", help="1ab (default) or 2")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--plot", help="SVG output path (sweep only)")
        p.add_argument("--workers", type=int, default=default_workers())
        p.add_argument("--gap-tol", type=float, default=GAP_TOL)
        p.add_argument("--qubit", action="store_true", help="also compute the qubit lower bound")
        p.add_argument("--restarts", type=int, default=None)
        p.add_argument("--config", help="flat key = value file mirroring the flags")
        return p

    common(subs.add_parser("sweep", help="certify a parameter grid, CSV out"))
    common(subs.add_parser("bound", help="certify one parameter, JSON out"))
    common(subs.add_parser("lhv", help="classical optimum of the figure of merit"))
    common(subs.add_parser("qubit-opt", help="two-qubit strategy search, JSON out"))
    common(subs.add_parser("verify", help="run the acceptance suite"), family=False)
    return top


COMMANDS = {"sweep": cmd_sweep, "bound": cmd_bound, "lhv": cmd_lhv, "qubit-opt": cmd_qubit_opt, "verify": cmd_verify}
DEFAULT_RESTARTS = {"qubit-opt": qubit_lab.DEFAULT_RESTARTS, "verify": 16}


def parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    argv = list(argv)
    commands = parser._subparsers._group_actions[0].choices
    if known.config and argv and argv[0] in commands:
        argv[1:1] = config_argv(commands[argv[0]], read_config(known.config))
    args = parser.parse_args(argv)
    if args.restarts is None:
        args.restarts = DEFAULT_RESTARTS.get(args.command, 16)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        try:
            args = parse(argv)
        except SystemExit as exc:  # argparse usage errors and --help
            return int(exc.code or 0)
        check_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"paradoxrand: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"paradoxrand: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
