"""Command-line entry point.

Subcommands mirror the experiment kinds (sample, capacity, tail,
product-sum, orders, queue, chain) plus `exp run <config.json>` and
`report <manifests...>`. Every run takes --seed (mandatory determinism: no
wall-clock seeding anywhere), --threads (default from DEPCTL_THREADS), and
--out. Exit codes: 0 completed/holds, 2 fails-type verdict, 1 error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import ConfigError, report_rows, run_experiment, write_csv
from .presets import DEFAULT_SEED, get_preset, preset_names

_KIND_BY_COMMAND = {
    "sample": "sample",
    "capacity": "capacity",
    "tail": "tail",
    "product-sum": "product_sum",
    "orders": "orders",
    "queue": "queue",
    "chain": "condition_chain",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="64-bit run seed")
    parser.add_argument(
        "--threads", type=int,
        default=int(os.environ.get("DEPCTL_THREADS", "1")),
        help="worker threads (default: DEPCTL_THREADS or 1)",
    )
    parser.add_argument("--out", default="runs", help="output directory root")
    parser.add_argument("--name", default=None, help="override the experiment name")


def _add_payload_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", default=None,
                        help=f"named preset; one of: {', '.join(preset_names())}")
    parser.add_argument("--payload", default=None,
                        help="inline JSON payload (alternative to --preset)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depctl",
        description="capacity tail behavior and dependence-control experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for cmd in _KIND_BY_COMMAND:
        p = sub.add_parser(cmd, help=f"run a {cmd} experiment")
        _add_common(p)
        _add_payload_args(p)

    p_exp = sub.add_parser("exp", help="run experiments from config files")
    exp_sub = p_exp.add_subparsers(dest="exp_command", required=True)
    p_run = exp_sub.add_parser("run", help="run a JSON experiment config")
    p_run.add_argument("config", help="path to the experiment config file")
    _add_common(p_run)

    p_rep = sub.add_parser("report", help="summarize run manifests")
    p_rep.add_argument("manifests", nargs="*", help="manifest.json paths")
    p_rep.add_argument("--out", default=None, help="also write the table as CSV here")
    return parser


def _config_from_args(args) -> dict:
    kind = _KIND_BY_COMMAND[args.command]
    if args.preset:
        config = get_preset(args.preset)
        if config["kind"] != kind:
            raise ConfigError(
                f"preset {args.preset!r} is a {config['kind']} experiment, not {kind}"
            )
    elif args.payload:
        payload = json.loads(args.payload)
        config = {
            "name": args.name or args.command,
            "kind": kind,
            "seed": DEFAULT_SEED,
            "payload": payload,
        }
    else:
        raise ConfigError("provide --preset or --payload")
    if args.name:
        config["name"] = args.name
    if args.seed is not None:
        config["seed"] = args.seed
    return config


def _run_report(args) -> int:
    rows = report_rows(args.manifests)
    header = ("name", "verdict", "key_statistic", "ci")
    widths = [
        max(len(header[i]), *(len(str(r[i])) for r in rows)) if rows else len(header[i])
        for i in range(4)
    ]
    line = "  ".join(h.ljust(w) for h, w in zip(header, widths))
    print(line)
    print("-" * len(line))
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    if args.out:
        write_csv(Path(args.out), list(header), rows)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return _run_report(args)
        if args.command == "exp":
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
            if args.seed is not None:
                config["seed"] = args.seed
            if args.name:
                config["name"] = args.name
        else:
            config = _config_from_args(args)
        manifest = run_experiment(config, args.out, threads=args.threads)
        print(json.dumps(
            {"name": manifest["name"], "verdict": manifest["verdict"],
             "summary": manifest["summary"]},
            indent=2, sort_keys=True, default=str,
        ))
        return manifest["exit_code"]
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
