"""
Collecting from a replay file
=============================

Machines without readable RAPL counters can still run the whole pipeline
by replaying recorded counter values. This script writes an energy replay
file, samples it into a trace and folds the trace into a report.
"""

import tempfile
import threading
from pathlib import Path

import numpy as np

from powerprof.collector import SamplingConfig, run_collection
from powerprof.energy_source import SourceKind, open_source, write_replay
from powerprof.exporter import dumps, export_report, plot_data

work = Path(tempfile.mkdtemp())

# cumulative microjoule counters for a package, a disk and a NIC; the
# package counter uses a small range so it wraps during the recording
rng = np.random.default_rng(0)
range_uj = 50_000_000
energy = np.zeros(3)
rows = []
for i in range(12):
    rows.append((i * 1000, [int(energy[0]) % range_uj, int(energy[1]), int(energy[2])]))
    energy += rng.uniform([10, 0.5, 0.2], [30, 2.0, 1.0]) * 1e6
path = write_replay(
    work / "node0.energy", rows, [("pkg", "compute"), ("sda", "disk"), ("eth0", "net")], range_uj=range_uj
)
print(path.read_text().splitlines()[0])

# the first reading is the baseline, so twelve readings give eleven samples
source = open_source(SourceKind("replay", path))
config = SamplingConfig("node0", work / "traces", period=1000)
(work / "traces").mkdir()
trace = run_collection(source, config, stop_signal=threading.Event(), paced=False, metadata={"opt_flag": "-O2"})
print(len(trace.samples), "samples, first:", trace.samples[0])

# one report per directory of traces, and a two-column series for plotting
report = export_report(work / "traces", "replay-demo", {"source": "replay"})
print(dumps(report.to_dict()))
print(plot_data(trace))
