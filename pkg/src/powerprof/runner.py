"""Measure a workload: sample power for the lifetime of one child process.

Energy is attributed node-wide. RAPL counters cover a whole package, so the
trace includes whatever else the node was doing while the child ran.
"""

from __future__ import annotations

import logging
import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Sequence

from .collector import NodeTrace, SamplingConfig, collect_samples, write_trace
from .energy_source import SourceKind, open_source
from .errors import EmptyTrace, SpawnFailure

log = logging.getLogger(__name__)


@dataclass
class RunSpec:
    command: Sequence[str]
    sampling: SamplingConfig
    source_kind: SourceKind = field(default_factory=lambda: SourceKind("powercap"))
    env: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)
    paced: bool = True

    def __post_init__(self) -> None:
        if not self.command:
            raise ValueError("command must not be empty")
        self.command = [str(c) for c in self.command]
        if any(not k for k in self.metadata):
            raise ValueError("metadata keys must be nonempty")
        if isinstance(self.source_kind, str):
            self.source_kind = SourceKind.parse(self.source_kind)


@dataclass
class RunResult:
    exit_status: int
    wall_time: float  # s
    trace: NodeTrace


def run_workload(spec: RunSpec) -> RunResult:
    """Start sampling, run ``spec.command`` to completion, write the trace.

    A nonzero exit of the child is reported in :attr:`RunResult.exit_status`,
    not raised. SIGTERM/SIGINT received while waiting are forwarded to the
    child, and whatever was sampled up to then is still written.
    """
    source = open_source(spec.source_kind)
    stop = threading.Event()
    box: dict[str, object] = {}

    def sample() -> None:
        try:
            box["trace"] = collect_samples(
                source, spec.sampling, stop, paced=spec.paced, metadata=spec.metadata
            )
        except BaseException as exc:  # surfaced in the caller
            box["error"] = exc

    sampler = threading.Thread(target=sample, name=f"sampler-{spec.sampling.node_id}", daemon=True)
    sampler.start()

    env = dict(os.environ)
    env.update(spec.env)
    t0 = time.monotonic()
    try:
        child = subprocess.Popen(spec.command, env=env)
    except OSError as exc:
        stop.set()
        sampler.join()
        raise SpawnFailure(f"cannot start {spec.command[0]!r}: {exc}") from exc

    previous = {}
    in_main = threading.current_thread() is threading.main_thread()

    def forward(signum, frame):
        log.warning("signal %d received; terminating child %d", signum, child.pid)
        child.send_signal(signum)

    if in_main:
        for sig in (signal.SIGTERM, signal.SIGINT):
            previous[sig] = signal.signal(sig, forward)
    try:
        while True:
            try:
                status = child.wait()
                break
            except InterruptedError:
                continue
    finally:
        wall_time = time.monotonic() - t0
        stop.set()
        sampler.join()
        for sig, handler in previous.items():
            signal.signal(sig, handler)

    if "error" in box:
        raise box["error"]  # type: ignore[misc]
    trace: NodeTrace = box["trace"]  # type: ignore[assignment]
    if not trace.samples:
        raise EmptyTrace(
            f"{spec.command[0]} exited after {wall_time:.3f} s, before the first sample",
            wall_time=wall_time,
        )
    write_trace(trace, spec.sampling.trace_path)
    return RunResult(status, wall_time, trace)
