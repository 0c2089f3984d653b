"""Batch command-line front end.

``cfsim run --config PATH`` executes every scheduler/allocator/precoder
combination of the config over its SNR grid and trial count, prints one
summary line per (scheduler, allocator, precoder, SNR) cell, and writes:

* ``results.csv``   aggregate mean/std rates per cell
* ``run.json``      full provenance: resolved config, seed, content hash
* ``ga_traces.csv`` gradient-ascent convergence traces of trial 0

All files are written atomically (temp file + rename), so an interrupted
run leaves no partial artifacts. Exit codes: 0 success, 2 config error,
3 numerical failure, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, replace
from pathlib import Path

from .config import parse_config
from .errors import (ConfigError, NumericalError, ResourceCapError,
                     SimulationError)
from .pipeline import aggregate, config_digest, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(x, ".12g")


def _results_csv(records: dict) -> str:
    lines = ["snr_db,scheduler,allocator,precoder,mode,mean_rate,std_rate,trials"]
    for (scheduler, allocator, precoder), record in records.items():
        mode = record.config.mode
        for snr_db, mean, std, trials in aggregate(record):
            lines.append(
                f"{_fmt(snr_db)},{scheduler},{allocator},{precoder},{mode},"
                f"{_fmt(mean)},{_fmt(std)},{trials}")
    return "\n".join(lines) + "\n"


def _traces_csv(records: dict) -> str:
    lines = ["scheduler,allocator,precoder,snr_db,cluster,iteration,objective"]
    for (scheduler, allocator, precoder), record in records.items():
        for (snr_db, cluster), objective in sorted(record.ga_traces.items()):
            for i, value in enumerate(objective):
                lines.append(
                    f"{scheduler},{allocator},{precoder},{_fmt(snr_db)},"
                    f"{cluster},{i},{_fmt(float(value))}")
    return "\n".join(lines) + "\n"


def _provenance_json(sweep, records: dict) -> str:
    payload = {
        "config": asdict(sweep.base),
        "combos": [list(c) for c in sweep.combos],
        "master_seed": sweep.base.master_seed,
        "config_sha256": config_digest(sweep.base),
        "records": {
            "+".join(combo): {
                "signaling_load": record.signaling_load,
                "flop_count": record.flop_count,
            }
            for combo, record in records.items()
        },
    }
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def _run(args) -> int:
    sweep = parse_config(args.config, overrides=args.set or ())
    base = sweep.base
    if args.seed is not None:
        base = replace(base, master_seed=args.seed)
    out_dir = Path(args.out)

    records = run_sweep(base, sweep.combos, threads=args.threads,
                        count_flops=args.counters)
    for combo, record in records.items():
        scheduler, allocator, precoder = combo
        for snr_db, mean, std, trials in aggregate(record):
            print(f"{scheduler}/{allocator}/{precoder} {record.config.mode} "
                  f"snr={snr_db:g}dB mean_rate={mean:.6g} std={std:.6g} "
                  f"trials={trials}")
        if args.counters:
            print(f"{scheduler}/{allocator}/{precoder}: "
                  f"signaling_load={record.signaling_load} "
                  f"flop_count={record.flop_count}")

    _atomic_write(out_dir / "results.csv", _results_csv(records))
    _atomic_write(out_dir / "run.json",
                  _provenance_json(replace(sweep, base=base), records))
    if any(record.ga_traces for record in records.values()):
        _atomic_write(out_dir / "ga_traces.csv", _traces_csv(records))
    print(f"wrote {out_dir / 'results.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfsim",
        description="Cell-free massive MIMO scheduling/power-allocation simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a batch simulation sweep")
    run.add_argument("--config", required=True, help="path to the config file")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for Monte Carlo trials")
    run.add_argument("--seed", type=int, default=None,
                     help="override the master seed")
    run.add_argument("--counters", action="store_true",
                     help="enable flop counters (forces serial execution)")
    run.set_defaults(func=_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NumericalError, SimulationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
