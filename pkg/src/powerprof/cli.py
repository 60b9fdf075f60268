"""``powerprof`` command line.

Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading
from pathlib import Path

from . import __version__
from .benchmarks import KERNELS, PAIRED_KERNELS, KernelSpec, run_kernel
from .collector import SamplingConfig, read_trace, run_collection
from .energy_source import SourceKind, open_source
from .errors import InvalidSpec, PowerprofError
from .exporter import (
    compare,
    dumps,
    export_report,
    read_report,
    write_comparison,
    write_plot_data,
    write_report,
)
from .runner import RunSpec, run_workload

log = logging.getLogger("powerprof")

SOURCE_ENV = "POWERPROF_SOURCE"


class UsageError(Exception):
    pass


def _pairs(items: list[str] | None, what: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, eq, value = item.partition("=")
        if not eq or not key:
            raise UsageError(f"{what} must look like KEY=VALUE, got {item!r}")
        out[key] = value
    return out


def _source(args) -> SourceKind:
    text = args.source or os.environ.get(SOURCE_ENV)
    if not text:
        raise UsageError(f"no energy source: pass --source or set {SOURCE_ENV}")
    try:
        return SourceKind.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _sampling(args) -> SamplingConfig:
    try:
        return SamplingConfig(args.node, Path(args.out), args.period_ms)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run_metadata(args) -> dict[str, str]:
    meta = _pairs(args.meta, "--meta")
    for key in ("opt_flag", "platform", "label"):
        value = getattr(args, key, None)
        if value is not None:
            meta[key] = value
    return meta


def _add_sampling_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", help=f"powercap | msr | replay:<path> (default: ${SOURCE_ENV})")
    p.add_argument("--node", required=True, help="node id; the trace is written to OUT/<node>.trace")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--period-ms", type=int, default=1000, help="sampling period (default 1000)")
    p.add_argument("--opt-flag", dest="opt_flag", help="optimization flag to record, e.g. --opt-flag=-O3")
    p.add_argument("--platform", help="platform label to record")
    p.add_argument("--label", help="run label to record")
    p.add_argument("--meta", action="append", metavar="KEY=VALUE", help="extra metadata (repeatable)")
    p.add_argument("--unpaced", action="store_true", help=argparse.SUPPRESS)


def cmd_sources(args) -> int:
    kinds = [SourceKind("powercap"), SourceKind("msr")]
    if args.source or os.environ.get(SOURCE_ENV):
        kinds = [_source(args)]
    status = 1
    for kind in kinds:
        try:
            src = open_source(kind)
        except PowerprofError as exc:
            print(f"{kind}: unavailable ({exc})")
            continue
        status = 0
        print(f"{kind}: {len(src.domains)} domain(s)")
        for d in src.domains:
            print(f"  {d.domain_id}\t{d.name}\t{d.component_class}\trange_uj={d.max_energy_range:g}")
    return status


def cmd_collect(args) -> int:
    source = open_source(_source(args))
    config = _sampling(args)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    stop = threading.Event()
    if threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGINT, signal.SIGTERM):
            signal.signal(sig, lambda *_: stop.set())
    if args.duration_s is not None:
        timer = threading.Timer(args.duration_s, stop.set)
        timer.daemon = True
        timer.start()
    trace = run_collection(
        source, config, stop, paced=not args.unpaced, metadata=_run_metadata(args)
    )
    print(f"wrote {config.trace_path} ({len(trace.samples)} samples)")
    return 0


def cmd_run(args) -> int:
    command = list(args.command)
    if command and command[0] == "--":
        command = command[1:]
    if not command:
        raise UsageError("run needs a command after --")
    config = _sampling(args)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    spec = RunSpec(
        command=command,
        sampling=config,
        source_kind=_source(args),
        env=_pairs(args.env, "--env"),
        metadata=_run_metadata(args),
        paced=not args.unpaced,
    )
    result = run_workload(spec)
    summary = {
        "node_id": config.node_id,
        "command": command,
        "exit_status": result.exit_status,
        "wall_time_s": round(result.wall_time, 6),
        "samples": len(result.trace.samples),
        "trace": str(config.trace_path),
    }
    (config.output_dir / f"{config.node_id}.result.json").write_text(dumps(summary))
    print(
        f"node={config.node_id} exit_status={result.exit_status} "
        f"wall_time_s={result.wall_time:.3f} samples={len(result.trace.samples)} "
        f"trace={config.trace_path}"
    )
    return 0


def cmd_export(args) -> int:
    report = export_report(args.trace_dir, args.label, _pairs(args.meta, "--meta"))
    write_report(report, args.output)
    agg = report.aggregate
    print(
        f"{args.output}: {agg.node_count} node(s), w_max_total={agg.w_max_total:.3f} W, "
        f"energy_total={agg.energy_total:.3f} J"
    )
    return 0


def cmd_compare(args) -> int:
    result = compare(read_report(args.base), read_report(args.other))
    if args.output:
        write_comparison(result, args.output)
    print(result.format())
    return 0


def cmd_plot_data(args) -> int:
    src = Path(args.trace)
    paths = sorted(src.glob("*.trace")) if src.is_dir() else [src]
    if not paths:
        raise UsageError(f"no traces in {src}")
    out = Path(args.output)
    if len(paths) > 1 or src.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / (p.stem + ".tsv") for p in paths]
    else:
        targets = [out]
    for p, target in zip(paths, targets):
        write_plot_data(read_trace(p), target)
        print(target)
    return 0


def cmd_bench(args) -> int:
    if args.variant and args.kernel not in PAIRED_KERNELS:
        raise UsageError(f"{args.kernel} has no variants")
    spec = KernelSpec(
        args.kernel,
        args.variant if args.kernel in PAIRED_KERNELS else None,
        args.size,
        args.threads,
        args.repeat,
        args.seed,
        args.tau,
    )
    res = run_kernel(spec, check=not args.no_check)
    line = {
        "kernel": spec.kernel,
        "variant": spec.variant,
        "size": spec.size,
        "threads": spec.threads,
        "repeat": spec.repeat,
        "wall_time_s": round(res.wall_time, 6),
        "checksum": res.checksum,
        "ops": res.ops_performed,
    }
    if args.json:
        print(json.dumps(line))
    else:
        print(" ".join(f"{k}={v}" for k, v in line.items() if v is not None))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powerprof", description="Power profiles of program runs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("sources", help="list available energy sources and their domains")
    p.add_argument("--source", help="check only this source")
    p.set_defaults(func=cmd_sources)

    p = sub.add_parser("collect", help="sample a source until interrupted")
    _add_sampling_args(p)
    p.add_argument("--duration-s", type=float, help="stop after this many seconds")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("run", help="sample while running a command: run [options] -- CMD ...")
    _add_sampling_args(p)
    p.add_argument("--env", action="append", metavar="KEY=VALUE", help="extra child environment")
    p.add_argument("command", nargs=argparse.REMAINDER)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export", help="fold a directory of traces into one report")
    p.add_argument("trace_dir")
    p.add_argument("--label", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--meta", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("compare", help="deltas of OTHER relative to BASE")
    p.add_argument("base")
    p.add_argument("other")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot-data", help="t_ms<TAB>total_w columns for a trace or a directory")
    p.add_argument("trace")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("bench", help="run one benchmark kernel")
    p.add_argument("kernel", choices=KERNELS)
    p.add_argument("--variant", choices=("base", "opt"))
    p.add_argument("--size", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--repeat", type=int)
    p.add_argument("--seed", type=int, default=2023)
    p.add_argument("--tau", type=float, default=1e-4, help=argparse.SUPPRESS)
    p.add_argument("--no-check", action="store_true", help="skip the oracle check")
    p.add_argument("--json", action="store_true", help="print the result as JSON")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, InvalidSpec) as exc:
        parser.error(str(exc))  # exits 2
    except (PowerprofError, OSError) as exc:
        print(f"powerprof: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
