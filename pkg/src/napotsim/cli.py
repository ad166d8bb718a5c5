"""Command-line front end: run sweeps, export traces, validate configs."""

import argparse
import sys
import time
from dataclasses import replace

from .engine import MEASUREMENT
from .errors import ConfigError
from .sweep import (
    DEFAULT_BASE_VA,
    ExperimentConfig,
    emit_csv,
    emit_plotdata,
    load_config,
    parse_size,
    run_sweep,
)
from .workloads import PATTERNS, WorkloadSpec, gen_trace, write_trace


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="napotsim",
        description="sv39 TLB hierarchy simulator with SVNAPOT 64KB pages",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment sweep and emit CSV")
    source = run_p.add_mutually_exclusive_group()
    source.add_argument("--config", metavar="PATH",
                        help="INI experiment description (default: built-in grid)")
    source.add_argument("--default", action="store_true",
                        help="run the built-in four-config grid explicitly")
    run_p.add_argument("--out", metavar="PATH",
                       help="CSV output path (default from config)")
    run_p.add_argument("--plotdata", metavar="PATH",
                       help="also write per-series plot data as JSON")
    run_p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="worker processes (default 1)")
    run_p.add_argument("--seed", type=int, metavar="N",
                       help="override the sweep seed")
    run_p.add_argument("--include-warmup", action="store_true",
                       help="keep warm-up rows in the CSV")

    gen_p = sub.add_parser("gen-trace", help="write one workload trace to a file")
    gen_p.add_argument("--pattern", choices=PATTERNS, required=True)
    gen_p.add_argument("--chunk-bytes", required=True, metavar="SIZE",
                       help="chunk size, e.g. 4096, 64K, 8M")
    gen_p.add_argument("--accesses", type=int, default=1_000_000, metavar="N",
                       help="measured accesses (default 1000000)")
    gen_p.add_argument("--seed", type=int, default=0, metavar="N")
    gen_p.add_argument("--base-va", default=hex(DEFAULT_BASE_VA), metavar="ADDR",
                       help="chunk base address (default %(default)s)")
    gen_p.add_argument("--out", required=True, metavar="PATH")

    val_p = sub.add_parser("validate", help="check an experiment config file")
    val_p.add_argument("--config", required=True, metavar="PATH")
    return parser


def _cmd_run(args):
    if args.config:
        config = load_config(args.config)
    else:
        config = ExperimentConfig().validate()
    if args.seed is not None:
        config = replace(config, seed=args.seed).validate()
    if args.include_warmup:
        config = replace(config, include_warmup=True)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    out_path = args.out if args.out else config.out_path
    started = time.monotonic()
    rows = run_sweep(config, jobs=args.jobs)
    elapsed = time.monotonic() - started
    if not config.include_warmup:
        out_rows = [row for row in rows if row.phase == MEASUREMENT]
    else:
        out_rows = rows
    emit_csv(out_rows, out_path)
    print(f"wrote {len(out_rows)} rows to {out_path} ({elapsed:.1f}s)")
    if args.plotdata:
        emit_plotdata(rows, args.plotdata)
        print(f"wrote plot data to {args.plotdata}")
    return 0


def _cmd_gen_trace(args):
    chunk = parse_size(args.chunk_bytes)
    base_va = int(args.base_va, 0)
    spec = WorkloadSpec(
        chunk, args.pattern, seed=args.seed, measured_accesses=args.accesses
    )
    trace = gen_trace(spec, base_va)
    write_trace(trace, args.out)
    total = len(trace.warmup) + len(trace.measurement)
    print(f"wrote {total} accesses to {args.out}")
    return 0


def _cmd_validate(args):
    config = load_config(args.config)
    cells = config.cells()
    print(
        f"{args.config}: ok ({len(config.configs)} configs, "
        f"{len(config.chunk_sizes())} chunk sizes, {len(cells)} cells)"
    )
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "gen-trace": _cmd_gen_trace,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
