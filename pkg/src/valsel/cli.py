"""Command-line interface.

Subcommands: ingest, gdv, run, analyze, report, selftest.
Exit codes: 0 ok, 1 usage, 2 data error, 3 divergence-only failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import DataError
from .harness import (
    ExperimentConfig,
    analyze_run_dir,
    emit_report,
    ingest_dataset,
    run_experiment,
)
from .selftest import run_selftest

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="valsel",
        description=(
            "Train shallow classifiers, replay checkpoint-selection rules over "
            "their trajectories, and test selections against the test-optimal "
            "checkpoint."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[], help="validate, encode, and summarize a dataset")
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--schema", help="schema JSON path (column -> kind)")
    p.add_argument("--infer-schema", action="store_true", help="infer a best-effort schema")
    p.add_argument("--target", help="target column when inferring (default: last column)")

    p = sub.add_parser("gdv", help="print the class-separability score of a dataset")
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--schema", help="schema JSON path")
    p.add_argument("--infer-schema", action="store_true")
    p.add_argument("--target")

    p = sub.add_parser("run", help="execute the crossed experiment plan")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--workers", type=int, help="override the config worker count")
    p.add_argument("--resume", action="store_true", help="skip runs whose trajectory file exists")

    p = sub.add_parser("analyze", help="run the hypothesis pipeline over persisted runs")
    p.add_argument("--runs", required=True, help="experiment output directory")
    p.add_argument("--alpha", type=float, help="significance level (default from config)")
    p.add_argument("--alpha-grid", help="comma-separated levels for the sweep")

    p = sub.add_parser("report", help="re-emit reports from persisted runs")
    p.add_argument("--runs", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--alpha", type=float)

    sub.add_parser("selftest", help="run the built-in oracle suites")
    return parser


def _schema_args(args) -> tuple[str | None, str | None]:
    if args.schema and args.infer_schema:
        raise DataError("give either --schema or --infer-schema, not both")
    if not args.schema and not args.infer_schema:
        # Convention: a sibling <stem>.schema.json next to the data file.
        sibling = Path(args.data).with_suffix("").parent / (Path(args.data).stem + ".schema.json")
        if sibling.exists():
            return (str(sibling), getattr(args, "target", None))
        raise DataError(
            f"a schema is required: pass --schema FILE or --infer-schema "
            f"(no {sibling} found)"
        )
    return (args.schema, getattr(args, "target", None))


def _cmd_ingest(args) -> int:
    schema_path, target = _schema_args(args)
    _, report = ingest_dataset(args.data, schema_path, target)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_gdv(args) -> int:
    schema_path, target = _schema_args(args)
    _, report = ingest_dataset(args.data, schema_path, target)
    print(report["gdv"])
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    counts = run_experiment(cfg, workers=args.workers, resume=args.resume)
    print(json.dumps(counts, sort_keys=True))
    return EXIT_DIVERGED if counts["diverged"] > 0 else EXIT_OK


def _parse_alpha_grid(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise DataError(f"bad --alpha-grid value: {text!r}") from None


def _cmd_analyze(args) -> int:
    bundle, cfg = analyze_run_dir(
        args.runs, alpha=args.alpha, alpha_grid=_parse_alpha_grid(args.alpha_grid)
    )
    out_dir = f"{args.runs}/reports"
    paths = emit_report(bundle, out_dir, fmt="csv")
    print(
        json.dumps(
            {
                "config_hash": bundle.config_hash,
                "alpha": bundle.alpha,
                "outcomes": len(bundle.outcomes),
                "runs_ok": bundle.n_runs_ok,
                "runs_diverged": bundle.n_runs_diverged,
                "skipped_groups": len(bundle.skipped_groups),
                "reports": [str(p) for p in paths],
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle, _ = analyze_run_dir(args.runs, alpha=args.alpha)
    paths = emit_report(bundle, f"{args.runs}/reports", fmt=args.format)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_selftest(_args) -> int:
    results = run_selftest()
    all_ok = True
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        all_ok = all_ok and passed
    return EXIT_OK if all_ok else EXIT_DATA


_COMMANDS = {
    "ingest": _cmd_ingest,
    "gdv": _cmd_gdv,
    "run": _cmd_run,
    "analyze": _cmd_analyze,
    "report": _cmd_report,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
