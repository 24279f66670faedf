"""Command-line entry points.

``cyclecast fetch`` downloads the FRED-hosted series into a data directory
(ISM is not freely downloadable and must come from a committed fixture);
``cyclecast run <kind>`` executes one experiment from a JSON config and
writes its report files. Failures exit nonzero with a machine-readable error
record on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments
from .ingest import SERIES_NAMES, fetch_series_fred
from .months import format_ym, parse_ym

FETCHABLE = tuple(name for name in SERIES_NAMES if name != "ISM")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclecast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    fetch = sub.add_parser("fetch", help="download the FRED series as CSV files")
    fetch.add_argument("--series-dir", required=True, help="directory for <NAME>.csv outputs")
    fetch.add_argument("--cache-dir", default="cache", help="raw JSON response cache")
    fetch.add_argument("--start", default="1959-01")
    fetch.add_argument("--end", default="2020-06")

    run = sub.add_parser("run", help="run one experiment and emit its reports")
    run.add_argument("kind", choices=experiments.EXPERIMENT_KINDS)
    run.add_argument("--config", default="", help="JSON config file (defaults apply if omitted)")
    run.add_argument("--out", default="", help="output directory (overrides config)")
    run.add_argument("--jobs", type=int, default=0, help="parallel seeds (overrides config)")
    run.add_argument("--no-standardize", action="store_true", help="skip z-scoring (literal pipeline)")
    run.add_argument("--sigmoid-head", action="store_true", help="sigmoid output instead of mapped tanh")
    run.add_argument("--bottleneck", type=int, default=0, help="autoencoder bottleneck dimension")
    run.add_argument("--lstm-relu-gates", action="store_true", help="literal ReLU LSTM activation")
    return parser


def cmd_fetch(args) -> int:
    api_key = os.environ.get("FRED_API_KEY", "")
    start, end = parse_ym(args.start), parse_ym(args.end)
    os.makedirs(args.series_dir, exist_ok=True)
    for name in FETCHABLE:
        series = fetch_series_fred(name, api_key, start, end, cache_dir=args.cache_dir)
        path = os.path.join(args.series_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("DATE,VALUE\n")
            for month, value in zip(series.months, series.values):
                fh.write(f"{format_ym(int(month))}-01,{float(value)!r}\n")
        print(f"fetched {name}: {len(series)} observations -> {path}")
    print("note: ISM is not on FRED; copy the committed ISM.csv fixture into the series dir")
    return 0


def cmd_run(args) -> int:
    if args.config:
        config = experiments.ExperimentConfig.from_json(args.config)
        config = experiments.ExperimentConfig.from_dict({**config.to_dict(), "kind": args.kind})
    else:
        config = experiments.ExperimentConfig(kind=args.kind)
    overrides = {}
    if args.out:
        overrides["out_dir"] = args.out
    if args.jobs:
        overrides["jobs"] = args.jobs
    if args.no_standardize:
        overrides["standardize"] = False
    if args.sigmoid_head:
        overrides["sigmoid_head"] = True
    if args.bottleneck:
        overrides["bottleneck"] = args.bottleneck
    if args.lstm_relu_gates:
        overrides["lstm_relu_gates"] = True
    if overrides:
        config = experiments.ExperimentConfig.from_dict({**config.to_dict(), **overrides})
    report = experiments.run_experiment(config)
    paths = experiments.emit_report(report, config.out_dir)
    for path in paths:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fetch":
            return cmd_fetch(args)
        return cmd_run(args)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports all failures
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
