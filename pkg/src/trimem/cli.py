"""Command-line front end: ``trimem {criteria,sweep,mc,report,validate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (or a
failed comparison under ``validate``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ConfigError, ExperimentSpec
from .criteria import BracketError, GainTriple, pipeline_criteria, table1_report
from .gaussian import PhysicalityError, vacuum_state
from .homodyne import (FilterError, chunk_rng, export_batch, run_mc, sample_shots, synthesize_traces,
                       write_shot_csv)
from .network import Stage, run_pipeline
from .report import bundled_spec, comparison_checks, report_csv, report_text
from .sweep import SweepSpec, parse_range, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

NUMERIC_ERRORS = (np.linalg.LinAlgError, FilterError, BracketError, PhysicalityError,
                  FloatingPointError, OverflowError)


def _load(path: str | None) -> ExperimentSpec:
    return bundled_spec() if path is None else ExperimentSpec.load(path)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_criteria(args: argparse.Namespace) -> int:
    spec = _load(args.config)
    gains = GainTriple.uniform(args.gain) if args.gain is not None else None
    result = pipeline_criteria(spec, args.stage, gains)
    _emit(_dumps(result.to_dict()), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    gain_mode, fixed = ("optimal", 0.0) if args.gain == "optimal" else ("fixed", float(args.gain))
    spec = SweepSpec(stage=args.stage, r_range=parse_range(args.r), eta_range=parse_range(args.eta),
                     t_ns=args.t_ns, gain_mode=gain_mode, fixed_g=fixed)
    _emit(sweep(spec).to_csv(), args.out)
    return EXIT_OK


def cmd_mc(args: argparse.Namespace) -> int:
    spec = _load(args.config)
    changes = {k: v for k, v in (("shots", args.shots), ("seed", args.seed), ("workers", args.workers))
               if v is not None}
    if changes:
        spec = spec.with_mc(**changes)
    t0 = time.perf_counter()
    run = run_mc(spec, args.stage)
    elapsed = time.perf_counter() - t0
    out = run.criteria.to_dict()
    out.update(
        shots=spec.mc.shots, seed=spec.mc.seed,
        x_variances=list(run.x_variances), x_stderr=list(run.x_stderr),
        p_variances=list(run.p_variances), p_stderr=list(run.p_stderr),
    )
    if args.shots_csv:
        write_shot_csv(args.shots_csv, run)
    if args.traces:
        _export_sample_traces(spec, args.stage, args.traces)
    _emit(_dumps(out), args.out)
    if args.timing:
        print(f"elapsed {elapsed:.3f} s", file=sys.stderr)
    return EXIT_OK


def _export_sample_traces(spec: ExperimentSpec, stage: str, stem: str, shots: int = 200) -> None:
    settings = spec.mc.with_shots(min(spec.mc.shots, shots))
    state = {s.stage: s.state for s in run_pipeline(spec)}[Stage(stage)]
    q = sample_shots(state, "xxx", settings, stream=101)
    cal = synthesize_traces(sample_shots(vacuum_state(3), "xxx", settings, stream=102), settings,
                            rng=chunk_rng(settings.seed, 103, 0), labels=("X1", "X2", "X3"))
    data = synthesize_traces(q, settings, rng=chunk_rng(settings.seed, 104, 0),
                             labels=("X1", "X2", "X3"), calibration=cal)
    export_batch(data, stem)


def cmd_report(args: argparse.Namespace) -> int:
    spec = _load(args.config)
    rows = table1_report(spec, atomic_gains=args.atomic_gains)
    if args.csv:
        Path(args.csv).write_text(report_csv(rows), encoding="utf-8")
    _emit(report_text(rows), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    spec = _load(args.config)
    print(f"spec OK: {args.config or 'bundled reference config'}")
    if args.schema_only:
        return EXIT_OK
    checks = comparison_checks(spec)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} comparisons passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trimem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    stages = [s.value for s in Stage]

    def config_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="experiment spec JSON (default: bundled reference parameters)")

    p = sub.add_parser("criteria", help="print the criterion values of one stage as JSON")
    config_arg(p)
    p.add_argument("--stage", choices=stages, default="released")
    p.add_argument("--gain", type=float, help="common gain (default: the state's optimal gains)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("sweep", help="write an (r, eta) grid of criterion values as CSV")
    p.add_argument("--stage", choices=stages, default="released")
    p.add_argument("--r", default="0:1.2:121", help="min:max:steps")
    p.add_argument("--eta", default="0:1:101", help="min:max:steps")
    p.add_argument("--t-ns", type=float, default=1000.0)
    p.add_argument("--gain", default="optimal", help="'optimal' or a fixed gain value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Monte Carlo homodyne estimate of the criteria")
    config_arg(p)
    p.add_argument("--stage", choices=stages, default="released")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--shots-csv", help="write shot-level quadrature estimates")
    p.add_argument("--traces", help="export a sample of X-basis traces under this file stem")
    p.add_argument("--timing", action="store_true", help="print wall time to stderr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("report", help="six-row correlation table, model vs measured")
    config_arg(p)
    p.add_argument("--csv", help="also write the long-format CSV here")
    p.add_argument("--atomic-gains", choices=("inferred", "optimal"), default="inferred")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check a spec file and compare with the measured values")
    config_arg(p)
    p.add_argument("--schema-only", action="store_true")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run_cli(argv: Sequence[str]) -> int:
    """Like :func:`main` but turns argparse's ``SystemExit`` into a return code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
