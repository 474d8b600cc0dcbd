"""Command-line front end: ``structured-harvest <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from structured_harvest import runs
from structured_harvest.config import ConfigError, RunConfig, load_config
from structured_harvest.errors import CFLError, NumericalFailure

EXIT_OK = 0
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4
EXIT_PARTIAL = 5

log = logging.getLogger("structured_harvest")


def _jobs(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("STRUCTURED_HARVEST_JOBS")
    return max(1, int(env)) if env else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults reproduce the case study)")
    common.add_argument("--out", help="output directory (default: config output_dir)")
    common.add_argument("--cells", type=int, help="number of size cells")
    common.add_argument("--horizon", type=float, help="simulation horizon T in years")
    common.add_argument("--jobs", type=int, help="worker processes (env STRUCTURED_HARVEST_JOBS)")
    common.add_argument("--figures", action="store_true", help="also render PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="structured-harvest", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="no-harvest stationary state")
    p = sub.add_parser("replacement", parents=[common], help="replacement index curve")
    p.add_argument("--e-max", type=float, help="upper end of the crowding range")
    p.add_argument("--points", type=int, default=201)
    p = sub.add_parser("simulate", parents=[common], help="forward PDE run")
    p.add_argument("--threshold", type=float, help="minimum harvest size in cm (omit for no harvest)")
    p.add_argument("--snapshot", type=float, action="append", default=[],
                   help="time at which to export the size profile (repeatable)")
    p = sub.add_parser("sweep", parents=[common], help="threshold sweep and refined optimum")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--step", type=float)
    p = sub.add_parser("adjoint", parents=[common], help="stationary adjoint and switching function")
    p.add_argument("--threshold", type=float, required=True)
    p = sub.add_parser("report", parents=[common], help="full reproduction bundle")
    p.add_argument("--no-figures", action="store_true")
    return ap


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(n_cells=args.cells, T=args.horizon, output_dir=args.out)
    if getattr(args, "command", None) == "sweep":
        from dataclasses import replace
        kw = {k: getattr(args, k) for k in ("start", "stop", "step") if getattr(args, k) is not None}
        if kw:
            cfg = replace(cfg, sweep=replace(cfg.sweep, **kw))
    return cfg


def _print(summary: dict) -> None:
    shown = {k: v for k, v in summary.items() if not k.startswith("_")}
    print(json.dumps(shown, indent=2, default=str))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except (ConfigError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = cfg.problems()
    for msg in problems:
        print(msg, file=sys.stderr)
    if cfg.errors():
        return EXIT_VALIDATION

    out = Path(cfg.output_dir)
    jobs = _jobs(args.jobs)
    try:
        if args.command == "steady":
            _print(runs.run_steady(cfg, out, args.figures))
        elif args.command == "replacement":
            rng = (0.0, args.e_max) if args.e_max else None
            _print(runs.run_replacement_curve(cfg, out, rng, args.points, args.figures))
        elif args.command == "simulate":
            summary, _ = runs.run_simulate(cfg, out, args.threshold, cfg.params.T, args.snapshot)
            _print(summary)
        elif args.command == "sweep":
            _print(runs.run_sweep(cfg, out, jobs, args.figures))
        elif args.command == "adjoint":
            _print(runs.run_adjoint(cfg, out, args.threshold, args.figures))
        elif args.command == "report":
            manifest = runs.run_report(cfg, out, jobs, figures=not args.no_figures)
            print(f"report written to {out} (status: {manifest['status']})")
            return EXIT_OK if manifest["status"] == "ok" else EXIT_PARTIAL
    except CFLError as exc:
        print(f"CFL failure: {exc} (dt={exc.dt:.6g}, max g={exc.g_max:.6g})", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
