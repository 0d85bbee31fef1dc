"""Command line entry point.

    thermalizer <experiment> [--config path] [--quick] [--seed-override k]
                [--out dir] [--workers w]

Exit codes: 0 success, 1 invariant violation in the results, 2 config/schema
error, 3 register exceeds the qubit guard.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermalizer",
        description="Seeded Gibbs-state preparation and verification studies")
    parser.add_argument("experiment", choices=harness.EXPERIMENTS)
    parser.add_argument("--config", help="JSON config path (preset if omitted)")
    parser.add_argument("--quick", action="store_true",
                        help="reduced sizes and budgets for smoke runs")
    parser.add_argument("--seed-override", type=int, default=None,
                        help="replace the seed list with this single seed")
    parser.add_argument("--out", default=None,
                        help="output directory (default: config output_path)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker pool size for (seed, beta) fan-out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            with open(args.config) as fh:
                raw = fh.read()
            data = json.loads(raw)
            if not isinstance(data, dict):
                raise harness.ConfigError("config must be a JSON object")
        else:
            data = harness.default_config(args.experiment)
        data["experiment"] = args.experiment
        if args.seed_override is not None:
            data["seeds"] = [args.seed_override]
        if args.workers is not None:
            data["workers"] = args.workers
        config = harness.validate_config(data)
        if args.quick:
            config = harness.validate_config(
                harness.quick_overrides(config.canon))
    except harness.SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (harness.ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        record = harness.run(config)
    except harness.SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    out_dir = args.out or config.canon["output_path"]
    csv_path, json_path = record.write(out_dir)
    if config.experiment == "symmetry-check":
        print(json.dumps(record.metadata["report"], indent=2, sort_keys=True))
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    if record.failures:
        for line in record.failures:
            print(f"invariant violation: {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
