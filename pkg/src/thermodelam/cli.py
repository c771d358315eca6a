"""Command-line driver: ``python -m thermodelam SCENARIO [options]``.

Exit status: 0 on success, 1 on a step failure or a violated energy
inequality, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .errors import ConfigurationError, ScenarioParseError
from .export import (run_summary, study_summary, write_json, write_ledger_csv,
                     write_plot_script, write_snapshots)
from .scenario import load_scenario, reference_scenario
from .stepper import run
from .study import convergence_study

log = logging.getLogger("thermodelam")
REFERENCE_NAMES = ("peel", "static", "thermal", "pull", "shear", "opening")


def _tau_list(text: str) -> list:
    try:
        taus = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid step list {text!r}")
    if len(taus) < 3 or any(b >= a for a, b in zip(taus, taus[1:])) or min(taus) <= 0:
        raise argparse.ArgumentTypeError("--sweep needs at least three positive, strictly decreasing steps")
    return taus


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="python -m thermodelam",
        description="Run a two-block adhesive delamination scenario and audit its energetics.")
    p.add_argument("scenario", help="scenario TOML file, or a bundled name: " + ", ".join(REFERENCE_NAMES))
    p.add_argument("--tau", type=float, help="override the time step")
    p.add_argument("--sweep", type=_tau_list, help="comma-separated decreasing time steps for a refinement study")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--snapshots", type=_positive_int, help="write a field snapshot every N steps")
    p.add_argument("--coupling", choices=("lagged", "fixed-point"), help="temperature coupling of the displacement step")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled audits (default: 0)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(spec: str):
    path = Path(spec)
    if path.exists():
        return load_scenario(path)
    if spec in REFERENCE_NAMES:
        return reference_scenario(spec)
    raise ConfigurationError(f"scenario file {spec!r} not found")


def _run_one(scenario, outdir: Path, seed: int) -> tuple:
    outdir.mkdir(parents=True, exist_ok=True)
    traj = run(scenario)
    write_ledger_csv(traj, outdir / "ledger.csv")
    write_snapshots(traj, outdir)
    write_plot_script(outdir)
    summary = run_summary(traj, seed=seed)
    return traj, summary


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        scenario = _load(args.scenario)
        if args.tau is not None:
            scenario = scenario.with_tau(args.tau)
        if args.coupling is not None:
            scenario = scenario.with_coupling(args.coupling.replace("-", "_"))
        if args.snapshots is not None:
            scenario = dataclasses.replace(scenario, snapshot_stride=args.snapshots)
        scenario.validate()
    except (ConfigurationError, ScenarioParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.sweep is None:
            traj, summary = _run_one(scenario, out, args.seed)
            write_json(summary, out / "summary.json")
            return _status(summary)
        status = 0
        report = convergence_study(scenario, args.sweep, keep_trajectories=True)
        levels = []
        for lv in report.levels:
            sub = out / f"tau_{lv.tau:g}"
            sub.mkdir(parents=True, exist_ok=True)
            write_ledger_csv(lv.trajectory, sub / "ledger.csv")
            write_snapshots(lv.trajectory, sub)
            write_plot_script(sub)
            s = run_summary(lv.trajectory, seed=args.seed)
            write_json(s, sub / "summary.json")
            levels.append(s)
            status = max(status, _status(s))
        if len(report.levels) < len(args.sweep):
            status = 1
        summary = study_summary(report, seed=args.seed)
        summary["runs"] = levels
        write_json(summary, out / "summary.json")
        return status
    except (ConfigurationError, ScenarioParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _status(summary: dict) -> int:
    if summary["failure"] is not None:
        print(f"step failure: {summary['failure']}", file=sys.stderr)
        return 1
    if not summary["inequalities_hold"]:
        r = summary["residuals"]
        print(f"energy inequality violated: mechanical min {r['mechanical_min']:.3e}, "
              f"total min {r['total_min']:.3e}, tolerance {r['tolerance']:.3e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())
