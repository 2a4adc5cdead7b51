"""Command line entry point: ``sdrmice run|summarize|trace``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import harness
from .errors import SdrMiceError


def _cmd_run(args) -> int:
    grid = harness.PROFILES[args.profile]
    if args.config:
        grid = harness.load_config(args.config, grid)
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if overrides:
        grid = replace(grid, **overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    conditions = harness.expand_grid(grid)
    logging.info("%d conditions x %d replications", len(conditions), grid.reps)
    start = time.perf_counter()
    records, traces = harness.run_batch(grid, workers=args.workers, conditions=conditions)
    harness.write_results(records, out / "results.csv")
    harness.write_traces(traces, out / "traces.csv")
    n_failed = sum(not r.ok for r in records)
    logging.info("wrote %d records (%d failed) in %.1fs", len(records), n_failed,
                 time.perf_counter() - start)
    return 0


def _results_path(path: Path) -> Path:
    return path / "results.csv" if path.is_dir() else path


def _cmd_summarize(args) -> int:
    records = harness.read_results(_results_path(Path(args.inp)))
    rows = harness.summarize(records)
    harness.write_summary(rows, args.out)
    logging.info("wrote %d summary rows to %s", len(rows), args.out)
    return 0


def _cmd_trace(args) -> int:
    path = Path(args.inp)
    path = path / "traces.csv" if path.is_dir() else path
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            writer = csv.writer(out, lineterminator="\n")
            header = next(reader)
            writer.writerow(header)
            col = {name: i for i, name in enumerate(header)}
            for row in reader:
                if args.method and row[col["method"]] != args.method:
                    continue
                if args.rep is not None and int(row[col["rep"]]) != args.rep:
                    continue
                writer.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdrmice",
                                     description="MICE with (supervised) component imputers")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the simulation grid")
    run.add_argument("--config", help="YAML/JSON file with grid fields")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--reps", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--profile", choices=sorted(harness.PROFILES), default="desk")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="PRB/CIW/CIC table from results.csv")
    summ.add_argument("--in", dest="inp", required=True, help="run directory or results.csv")
    summ.add_argument("--out", required=True, help="summary CSV path")
    summ.set_defaults(func=_cmd_summarize)

    trace = sub.add_parser("trace", help="emit convergence traces")
    trace.add_argument("--in", dest="inp", required=True, help="run directory or traces.csv")
    trace.add_argument("--out", help="write here instead of stdout")
    trace.add_argument("--method")
    trace.add_argument("--rep", type=int)
    trace.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SdrMiceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
