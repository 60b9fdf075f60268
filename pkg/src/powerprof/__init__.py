"""Power-consumption profiling for program runs.

Sample cumulative energy counters (powercap, RAPL MSRs or a replay file)
into per-node power traces, reduce them to peak/median/average power and
energy, and compare runs built at different optimization levels.
"""

__version__ = "0.1.0"

from .collector import NodeTrace, PowerSample, SamplingConfig, read_trace, run_collection, write_trace
from .energy_source import (
    DomainDescriptor,
    EnergyReading,
    SourceKind,
    energy_delta,
    enumerate_domains,
    open_source,
    read_counters,
)
from .exporter import ComparisonReport, Report, compare, export_report, read_report, write_report
from .profile import (
    AggregateProfile,
    PowerProfile,
    aggregate_max,
    energy_total,
    node_power,
    profile_of,
    w_avg,
    w_max,
    w_med,
)
from .runner import RunResult, RunSpec, run_workload

__all__ = [
    "AggregateProfile",
    "ComparisonReport",
    "DomainDescriptor",
    "EnergyReading",
    "NodeTrace",
    "PowerProfile",
    "PowerSample",
    "Report",
    "RunResult",
    "RunSpec",
    "SamplingConfig",
    "SourceKind",
    "aggregate_max",
    "compare",
    "energy_delta",
    "energy_total",
    "enumerate_domains",
    "export_report",
    "node_power",
    "open_source",
    "profile_of",
    "read_counters",
    "read_report",
    "read_trace",
    "run_collection",
    "run_workload",
    "w_avg",
    "w_max",
    "w_med",
    "write_report",
    "write_trace",
]
