"""Command-line interface.

    chainsim run <scenario> [--seed S] [--out DIR] [--blocks N]
    chainsim sweep <scenario> --param P --values V1,V2 [--seeds S1,S2]
                   [--out DIR] [--workers W]
    chainsim presets list

<scenario> is a preset name (bitcoin, litecoin, dogecoin) or a path to a
scenario JSON file. Exit codes: 0 success, 2 scenario/validation error,
3 runtime fault.
"""

import argparse
import json
import sys
from dataclasses import replace

from ._backend import BACKEND
from .errors import ConfigError, RuntimeFault
from .runner import run, sweep
from .scenario import PRESETS, SWEEPABLE, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAULT = 3


def _parse_value(param, text):
    if param in ("participation_rate", "lambda"):
        return float(text)
    if param == "degree":
        return int(text)
    return text


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.blocks is not None:
        scn = replace(scn, stop_blocks=args.blocks).validate()
    report = run(scn, seed=args.seed)
    if args.out:
        report.write(args.out)
        print(f"wrote {args.out}/summary.json")
    summary = report.summary_dict()
    del summary["scenario"]
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scn = load_scenario(args.scenario)
    values = [_parse_value(args.param, v) for v in args.values.split(",") if v != ""]
    seeds = (
        [int(s) for s in args.seeds.split(",") if s != ""]
        if args.seeds
        else None
    )
    results = sweep(
        scn,
        args.param,
        values,
        seeds=seeds,
        out_dir=args.out,
        workers=args.workers,
    )
    for param, value, seed, report in results:
        t = "-" if report.t_mbp_ms is None else f"{report.t_mbp_ms / 1000.0:.3f}s"
        print(
            f"{param}={value} seed={seed}: t_mbp={t} "
            f"fork_rate={report.fork_rate * 100.0:.3f}%"
        )
    if args.out:
        print(f"wrote {args.out}/manifest.json")
    return EXIT_OK


def _cmd_presets(args) -> int:
    if args.action != "list":
        raise ConfigError(f"unknown presets action {args.action!r}")
    for name, scn in sorted(PRESETS.items()):
        print(
            f"{name}: {scn.n_nodes} nodes, "
            f"{scn.target_interval_ms / 60000.0:g} min interval, "
            f"{scn.block_size_bytes} byte blocks, "
            f"{scn.stop_blocks} blocks"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="chainsim",
        description=(
            "Deterministic discrete-event simulator of block propagation "
            f"over a regional peer-to-peer network (backend: {BACKEND})"
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run one scenario")
    pr.add_argument("scenario", help="preset name or scenario JSON path")
    pr.add_argument("--seed", type=int, default=None)
    pr.add_argument("--out", default=None, help="report output directory")
    pr.add_argument(
        "--blocks", type=int, default=None, help="override stop_blocks"
    )
    pr.set_defaults(fn=_cmd_run)

    ps = sub.add_parser("sweep", help="run a parameter sweep")
    ps.add_argument("scenario")
    ps.add_argument("--param", required=True, choices=SWEEPABLE)
    ps.add_argument("--values", required=True, help="comma-separated values")
    ps.add_argument("--seeds", default=None, help="comma-separated seeds")
    ps.add_argument("--out", default=None)
    ps.add_argument("--workers", type=int, default=1)
    ps.set_defaults(fn=_cmd_sweep)

    pp = sub.add_parser("presets", help="preset library")
    pp.add_argument("action", choices=["list"])
    pp.set_defaults(fn=_cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeFault as e:
        print(f"runtime fault: {e}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
