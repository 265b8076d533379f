"""Command-line surface: validate, run, aggregate, report, mock-serve."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import aggregate as agg
from . import mockserver, runner, store


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arena",
        description="Run guessing contests and second-price auctions among pluggable agents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a TOML config and exit")
    p.add_argument("--config", required=True, type=Path)

    p = sub.add_parser("run", help="run all sessions of a config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="log directory")
    p.add_argument("--workers", type=int, default=1, help="parallel sessions")
    p.add_argument(
        "--dry-run",
        action="store_true",
        help="render the first run's prompts without dispatching any agent",
    )

    p = sub.add_parser("aggregate", help="summarize run logs")
    p.add_argument("--in", dest="in_dir", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--format", choices=["csv", "structured-summary"], default="csv")
    p.add_argument("--samples-out", type=Path, help="also export deviation samples")
    p.add_argument("--series-out", type=Path, help="also export per-run action series")

    p = sub.add_parser("report", help="print a rule-break table from a summary CSV")
    p.add_argument("--in", dest="in_file", required=True, type=Path)

    p = sub.add_parser("mock-serve", help="serve scripted chat completions")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--script", required=True, type=Path)
    p.add_argument("--host", default="127.0.0.1")
    return parser


def _dry_run(config) -> None:
    import numpy as np

    from .session import build_roster, sample_group_spec
    from .session import _render_seat_prompt  # noqa: F401 (internal reuse)

    roster = build_roster(config)
    spec = sample_group_spec(
        config.game, config.group, np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0,)))
    )
    for seat, agent in enumerate(roster):
        bundle = _render_seat_prompt(spec, config.environment, config.cot, None, seat, 1)
        print(f"=== seat {seat} ({agent.name}) ===")
        print("[system]")
        print(bundle.system)
        print("[user]")
        print(bundle.user)
        print()


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ARENA_LOG", "WARNING").upper())
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            store.load_config(args.config)
            print(f"OK: {args.config}")
            return 0
        if args.command == "run":
            config = store.load_config(args.config)
            if args.dry_run:
                _dry_run(config)
                return 0
            logs = runner.run_experiment(config, out_dir=args.out, workers=args.workers)
            total_runs = sum(len(log.runs) for log in logs)
            print(f"wrote {total_runs} runs over {len(logs)} sessions to {args.out}")
            return 0
        if args.command == "aggregate":
            records = list(store.read_runs(args.in_dir))
            rows = agg.aggregate(records)
            agg.export_summary(rows, args.out, format=args.format)
            print(f"wrote {len(rows)} summary rows to {args.out}")
            if args.samples_out:
                agg.export_samples(records, args.samples_out)
                print(f"wrote deviation samples to {args.samples_out}")
            if args.series_out:
                agg.export_series(records, args.series_out)
                print(f"wrote action series to {args.series_out}")
            return 0
        if args.command == "report":
            print(agg.render_report(agg.read_summary(args.in_file)))
            return 0
        if args.command == "mock-serve":
            script = mockserver.load_script(args.script)
            server = mockserver.MockChatServer(args.port, script, host=args.host)
            print(f"mock chat-completion server on {server.url}")
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                server.stop()
            return 0
    except (store.ParseError, store.SchemaError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced, not swallowed: CLI contract is exit code + message
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
