"""Fold per-node trace files into one report and compare two reports.

Reports and comparisons are JSON documents. Numbers are rounded to six
fractional digits before they are stored, and node profiles are rounded
*before* aggregation, so a report read back from disk is equal to the one
that was written and exporting the same directory twice gives identical
bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .collector import NodeTrace, read_trace
from .errors import IncompatibleVersion, MalformedReport, MalformedTrace, NoTraces
from .profile import AggregateProfile, PowerProfile, aggregate_max, node_powers, profile_of

REPORT_VERSION = "1.0"
DECIMALS = 6
METRICS = ("w_max", "w_med", "w_avg", "energy_total", "runtime")


def _num(x: float | None) -> float | None:
    if x is None:
        return None
    r = round(float(x), DECIMALS)
    return 0.0 if r == 0 else r  # no "-0.0" in files


def _major(version: str) -> int:
    try:
        return int(str(version).split(".")[0])
    except ValueError as exc:
        raise MalformedReport(f"bad version tag {version!r}") from exc


@dataclass
class Report:
    label: str
    metadata: dict[str, str]
    nodes: list[tuple[str, PowerProfile]]
    aggregate: AggregateProfile
    version: str = REPORT_VERSION

    def __post_init__(self) -> None:
        ids = [n for n, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids in a report must be unique")

    def node(self, node_id: str) -> PowerProfile:
        for n, p in self.nodes:
            if n == node_id:
                return p
        raise KeyError(node_id)

    def metric(self, name: str) -> float:
        """Aggregate-level value of one comparison metric.

        Peaks, medians, averages and energies add across nodes; the runtime
        of a job is that of its longest node.
        """
        profiles = [p for _, p in self.nodes]
        if name == "w_max":
            return self.aggregate.w_max_total
        if name == "energy_total":
            return self.aggregate.energy_total
        if name == "runtime":
            return max(p.runtime for p in profiles)
        if name in ("w_med", "w_avg"):
            return float(sum((Fraction(getattr(p, name)) for p in profiles), Fraction(0)))
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "label": self.label,
            "metadata": {k: self.metadata[k] for k in sorted(self.metadata)},
            "nodes": [
                {
                    "node_id": node_id,
                    "w_max_w": _num(p.w_max),
                    "w_med_w": _num(p.w_med),
                    "w_avg_w": _num(p.w_avg),
                    "energy_j": _num(p.energy_total),
                    "runtime_s": _num(p.runtime),
                    "sample_count": p.sample_count,
                    "avg_to_peak_ratio": _num(p.avg_to_peak_ratio),
                }
                for node_id, p in self.nodes
            ],
            "aggregate": {
                "w_max_total_w": _num(self.aggregate.w_max_total),
                "energy_total_j": _num(self.aggregate.energy_total),
                "node_count": self.aggregate.node_count,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> Report:
        try:
            version = str(data["version"])
            _major(version)
            nodes = [
                (
                    str(n["node_id"]),
                    PowerProfile(
                        w_max=float(n["w_max_w"]),
                        w_med=float(n["w_med_w"]),
                        w_avg=float(n["w_avg_w"]),
                        energy_total=float(n["energy_j"]),
                        runtime=float(n["runtime_s"]),
                        sample_count=int(n["sample_count"]),
                    ),
                )
                for n in data["nodes"]
            ]
            agg = data["aggregate"]
            stored = (float(agg["w_max_total_w"]), float(agg["energy_total_j"]), int(agg["node_count"]))
            report = cls(str(data["label"]), dict(data.get("metadata") or {}), nodes,
                         aggregate_max(p for _, p in nodes), version)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReport(f"report is missing or has invalid fields: {exc}") from exc
        report.validate(stored)
        return report

    def validate(self, stored: tuple[float, float, int] | None = None) -> None:
        """Check the aggregate against one recomputed from the node profiles."""
        fresh = aggregate_max(p for _, p in self.nodes)
        peak, energy, count = stored or (
            self.aggregate.w_max_total, self.aggregate.energy_total, self.aggregate.node_count
        )
        tol = 10.0 ** -DECIMALS
        if (
            count != fresh.node_count
            or not math.isclose(peak, fresh.w_max_total, rel_tol=1e-12, abs_tol=tol)
            or not math.isclose(energy, fresh.energy_total, rel_tol=1e-12, abs_tol=tol)
        ):
            raise MalformedReport("aggregate does not match the node profiles")


def build_report(
    traces: Iterable[NodeTrace], label: str, metadata: dict[str, str] | None = None
) -> Report:
    nodes = sorted(((t.node_id, profile_of(t).rounded(DECIMALS)) for t in traces), key=lambda x: x[0])
    if not nodes:
        raise NoTraces("no traces to report on")
    return Report(label, dict(metadata or {}), nodes, aggregate_max(p for _, p in nodes))


def load_traces(trace_dir: Path | str) -> list[NodeTrace]:
    trace_dir = Path(trace_dir)
    if not trace_dir.is_dir():
        raise NoTraces(f"{trace_dir} is not a directory")
    traces = []
    seen: dict[str, Path] = {}
    for path in sorted(trace_dir.glob("*.trace")):
        try:
            trace = read_trace(path)
        except MalformedTrace:
            raise
        except (OSError, ValueError) as exc:
            raise MalformedTrace(f"{path}: {exc}") from exc
        if not trace.samples:
            raise MalformedTrace(f"{path}: trace has no samples")
        if trace.node_id in seen:
            raise MalformedTrace(f"{path}: node {trace.node_id!r} already read from {seen[trace.node_id]}")
        seen[trace.node_id] = path
        traces.append(trace)
    if not traces:
        raise NoTraces(f"no *.trace files in {trace_dir}")
    return traces


def export_report(
    trace_dir: Path | str, label: str, metadata: dict[str, str] | None = None
) -> Report:
    """One profile per trace file in ``trace_dir``, nodes ordered by id."""
    return build_report(load_traces(trace_dir), label, metadata)


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_report(report: Report, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(dumps(report.to_dict()), encoding="utf-8")
    return path


def read_report(path: Path | str) -> Report:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedReport(f"{path}: expected an object")
    return Report.from_dict(data)


@dataclass(frozen=True)
class MetricDelta:
    base: float
    other: float
    delta_abs: float
    delta_pct: float | None  # None when base == 0

    @classmethod
    def of(cls, base: float, other: float) -> MetricDelta:
        pct = 100.0 * (other - base) / base if base != 0 else None
        return cls(base, other, other - base, pct)

    def to_dict(self) -> dict:
        return {
            "base": _num(self.base),
            "other": _num(self.other),
            "delta_abs": _num(self.delta_abs),
            "delta_pct": _num(self.delta_pct),
        }


@dataclass
class ComparisonReport:
    base_label: str
    other_label: str
    metrics: dict[str, MetricDelta]
    nodes: dict[str, dict[str, MetricDelta]] = field(default_factory=dict)
    version: str = REPORT_VERSION

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "base_label": self.base_label,
            "other_label": self.other_label,
            "metrics": {m: d.to_dict() for m, d in self.metrics.items()},
            "nodes": {
                n: {m: d.to_dict() for m, d in per.items()} for n, per in self.nodes.items()
            },
        }

    def format(self) -> str:
        """Human-readable table; percentages to one decimal."""
        lines = [f"{'metric':<14}{self.base_label:>14}{self.other_label:>14}{'delta':>14}{'delta %':>10}"]
        for m, d in self.metrics.items():
            pct = "n/a" if d.delta_pct is None else f"{d.delta_pct:+.1f}%"
            lines.append(f"{m:<14}{d.base:>14.3f}{d.other:>14.3f}{d.delta_abs:>+14.3f}{pct:>10}")
        return "\n".join(lines)


def _profile_value(p: PowerProfile, name: str) -> float:
    return getattr(p, name)


def compare(base: Report, other: Report) -> ComparisonReport:
    """Deltas of ``other`` relative to ``base`` (the unoptimized run).

    Aggregate metrics are always compared; per-node metrics only for node
    ids present in both reports.
    """
    if _major(base.version) != _major(other.version):
        raise IncompatibleVersion(f"cannot compare report versions {base.version} and {other.version}")
    metrics = {m: MetricDelta.of(base.metric(m), other.metric(m)) for m in METRICS}
    other_ids = {n for n, _ in other.nodes}
    nodes = {}
    for node_id, bp in base.nodes:
        if node_id in other_ids:
            op = other.node(node_id)
            nodes[node_id] = {m: MetricDelta.of(_profile_value(bp, m), _profile_value(op, m)) for m in METRICS}
    return ComparisonReport(base.label, other.label, metrics, nodes)


def write_comparison(cmp: ComparisonReport, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(dumps(cmp.to_dict()), encoding="utf-8")
    return path


def plot_data(trace: NodeTrace) -> str:
    """Two tab-separated columns, ``t_ms`` and total node watts."""
    return "".join(
        f"{s.t}\t{_num(w)!r}\n" for s, w in zip(trace.samples, node_powers(trace))
    )


def write_plot_data(trace: NodeTrace, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(plot_data(trace))
    return path
