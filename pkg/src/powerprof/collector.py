"""Periodic sampling of an energy source into a per-node power trace.

The sampler runs on a fixed-rate schedule (tick ``k`` is due at
``start + k * period``). The first energy reading only sets the baseline;
every later tick turns the counter deltas into watts and sums them into the
compute/disk/net fields according to each domain's component class.
"""

from __future__ import annotations

import logging
import math
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .energy_source import (
    EnergySource,
    PowerReading,
    Reading,
    energy_delta,
)
from .errors import EmptyTrace, MalformedTrace, ReplayExhausted, ZeroInterval

log = logging.getLogger(__name__)

TRACE_HEADER = "#powerprof-trace"
TRACE_VERSION = "v1"
POWER_DECIMALS = 6
MIN_PERIOD_MS = 10

_NODE_RE = re.compile(r"^[A-Za-z0-9_\-][A-Za-z0-9_.\-]*$")
_META_KEY_RE = re.compile(r"^[^\s=]+$")


def _check_node_id(node_id: str) -> None:
    if not isinstance(node_id, str) or not _NODE_RE.match(node_id):
        raise ValueError(f"node_id must be a nonempty filesystem-safe name, got {node_id!r}")


@dataclass(frozen=True)
class SamplingConfig:
    node_id: str
    output_dir: Path
    period: int = 1000  # ms

    def __post_init__(self) -> None:
        _check_node_id(self.node_id)
        if self.period < MIN_PERIOD_MS:
            raise ValueError(f"period must be >= {MIN_PERIOD_MS} ms, got {self.period}")
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def trace_path(self) -> Path:
        return self.output_dir / f"{self.node_id}.trace"


@dataclass(frozen=True)
class PowerSample:
    t: int  # ms since collection start, end of the sampled interval
    compute_w: float
    disk_w: float = 0.0
    net_w: float = 0.0

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"sample time must be >= 0, got {self.t}")
        for name in ("compute_w", "disk_w", "net_w"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass
class NodeTrace:
    node_id: str
    period: int  # ms
    samples: list[PowerSample] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_node_id(self.node_id)
        if self.period <= 0:
            raise ValueError("period must be positive")
        for a, b in zip(self.samples, self.samples[1:]):
            if b.t <= a.t:
                raise ValueError(f"sample times must strictly increase ({a.t} -> {b.t})")

    def __len__(self) -> int:
        return len(self.samples)


def _quantize(watts: float) -> float:
    # the trace file keeps 6 fractional digits; keep memory and disk identical
    return round(watts, POWER_DECIMALS)


def sample_once(
    source: EnergySource,
    prev_readings: Sequence[Reading] | None,
    now: float | None = None,
    *,
    origin: float = 0.0,
) -> tuple[PowerSample, list[Reading]]:
    """Take one reading and turn it into a :class:`PowerSample`.

    ``now`` stamps hardware readings (replay rows carry their own time);
    ``origin`` is subtracted to make the sample time relative to the start
    of collection. Power-mode replay sources ignore ``prev_readings``.
    """
    readings = source.read_counters(now)
    classes = {d.domain_id: d.component_class for d in source.domains}
    totals = {"compute": 0.0, "disk": 0.0, "net": 0.0}

    if readings and isinstance(readings[0], PowerReading):
        for r in readings:
            totals[classes[r.domain_id]] += r.power
    else:
        if not prev_readings:
            raise ValueError("energy sources need a baseline reading")
        ranges = {d.domain_id: d.max_energy_range for d in source.domains}
        prev = {r.domain_id: r for r in prev_readings}
        for r in readings:
            p = prev[r.domain_id]
            elapsed_ms = r.timestamp - p.timestamp
            if elapsed_ms == 0:
                raise ZeroInterval(f"no time elapsed for domain {r.domain_id}")
            delta_uj = energy_delta(p, r, ranges[r.domain_id])
            # uJ / ms = mW
            totals[classes[r.domain_id]] += delta_uj / elapsed_ms / 1000.0

    t = int(round(readings[0].timestamp - origin))
    sample = PowerSample(
        t,
        _quantize(totals["compute"]),
        _quantize(totals["disk"]),
        _quantize(totals["net"]),
    )
    return sample, list(readings)


def collect_samples(
    source: EnergySource,
    config: SamplingConfig,
    stop_signal: threading.Event,
    *,
    paced: bool = True,
    metadata: dict[str, str] | None = None,
    max_samples: int | None = None,
) -> NodeTrace:
    """Sampling loop without persistence.

    Runs until ``stop_signal`` is set, the source is exhausted, or
    ``max_samples`` have been taken. With ``paced=False`` ticks are not
    waited for, which only makes sense for replay sources.
    """
    period_s = config.period / 1000.0
    trace = NodeTrace(config.node_id, config.period, [], dict(metadata or {}))
    start = time.monotonic()

    prev: list[Reading] | None = None
    origin = 0.0
    if source.mode == "energy":
        try:
            prev = source.read_counters()
        except ReplayExhausted:
            return trace
        origin = prev[0].timestamp

    k = 1
    while max_samples is None or len(trace.samples) < max_samples:
        if paced:
            delay = start + k * period_s - time.monotonic()
            if stop_signal.wait(timeout=max(delay, 0.0)):
                break
        elif stop_signal.is_set():
            break
        try:
            sample, prev = sample_once(source, prev, origin=origin)
        except ReplayExhausted:
            break
        if trace.samples and sample.t <= trace.samples[-1].t:
            # millisecond rounding on a stalled clock; fold into the next tick
            log.debug("dropping sample at t=%d ms (not after previous)", sample.t)
        else:
            trace.samples.append(sample)
        # missed ticks are not backfilled: the next sample spans the real gap
        k = max(k + 1, int((time.monotonic() - start) / period_s) + 1)
    return trace


def run_collection(
    source: EnergySource,
    config: SamplingConfig,
    stop_signal: threading.Event,
    *,
    paced: bool = True,
    metadata: dict[str, str] | None = None,
    max_samples: int | None = None,
) -> NodeTrace:
    """Collect until stopped and write ``<output_dir>/<node_id>.trace``."""
    trace = collect_samples(
        source, config, stop_signal, paced=paced, metadata=metadata, max_samples=max_samples
    )
    if not trace.samples:
        raise EmptyTrace(f"node {config.node_id}: stopped before the first sample")
    write_trace(trace, config.trace_path)
    return trace


def _fmt_power(v: float) -> str:
    s = f"{v:.{POWER_DECIMALS}f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def format_trace(trace: NodeTrace) -> str:
    lines = [f"{TRACE_HEADER} {TRACE_VERSION} node={trace.node_id} period_ms={trace.period}"]
    for key in sorted(trace.metadata):
        value = str(trace.metadata[key])
        if not _META_KEY_RE.match(key) or "\n" in value or "\r" in value:
            raise ValueError(f"metadata entry {key!r} cannot be stored in a trace file")
        lines.append(f"#meta {key}={value}")
    for s in trace.samples:
        lines.append(f"{s.t},{_fmt_power(s.compute_w)},{_fmt_power(s.disk_w)},{_fmt_power(s.net_w)}")
    return "\n".join(lines) + "\n"


def write_trace(trace: NodeTrace, path: Path | str) -> Path:
    path = Path(path)
    text = format_trace(trace)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
    return path


def parse_trace(text: str, where: str = "<trace>") -> NodeTrace:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MalformedTrace(f"{where}: empty file")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != TRACE_HEADER:
        raise MalformedTrace(f"{where}:1: bad header {lines[0]!r}")
    if head[1] != TRACE_VERSION:
        raise MalformedTrace(f"{where}:1: unsupported trace version {head[1]!r}")
    if not head[2].startswith("node=") or not head[3].startswith("period_ms="):
        raise MalformedTrace(f"{where}:1: bad header {lines[0]!r}")
    node_id = head[2][len("node="):]
    try:
        period = int(head[3][len("period_ms="):])
        _check_node_id(node_id)
        if period <= 0:
            raise ValueError("period must be positive")
    except ValueError as exc:
        raise MalformedTrace(f"{where}:1: {exc}") from exc

    metadata: dict[str, str] = {}
    samples: list[PowerSample] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#meta "):
            if samples:
                raise MalformedTrace(f"{where}:{lineno}: metadata after data")
            key, eq, value = line[len("#meta "):].partition("=")
            if not eq or not _META_KEY_RE.match(key) or key in metadata:
                raise MalformedTrace(f"{where}:{lineno}: bad metadata line")
            metadata[key] = value
            continue
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise MalformedTrace(f"{where}:{lineno}: expected 4 fields")
        try:
            t = int(parts[0])
            powers = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise MalformedTrace(f"{where}:{lineno}: {exc}") from exc
        if t < 0:
            raise MalformedTrace(f"{where}:{lineno}: negative time")
        if any(not math.isfinite(p) or p < 0 for p in powers):
            raise MalformedTrace(f"{where}:{lineno}: power must be finite and >= 0")
        if samples and t <= samples[-1].t:
            raise MalformedTrace(f"{where}:{lineno}: time {t} not after {samples[-1].t}")
        samples.append(PowerSample(t, *powers))
    return NodeTrace(node_id, period, samples, metadata)


def read_trace(path: Path | str) -> NodeTrace:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedTrace(f"{path}: not text") from exc
    return parse_trace(text, str(path))
