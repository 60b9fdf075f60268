"""
Power profile of a single trace
===============================

Build a small trace by hand and compute the statistics that make up a
node's power profile.
"""

from powerprof import NodeTrace, PowerSample
from powerprof.profile import aggregate_max, node_powers, profile_of

# five one-second samples; each sample splits node power into
# compute, disk and network watts
trace = NodeTrace(
    "node0",
    1000,
    [
        PowerSample(1000, 12.0, 1.0, 0.25),
        PowerSample(2000, 14.0, 0.0, 0.25),
        PowerSample(3000, 18.0, 0.5, 0.0),
        PowerSample(4000, 14.0, 0.0, 0.0),
        PowerSample(5000, 13.0, 1.0, 0.5),
    ],
)
print("node power per sample:", node_powers(trace))

# peak, median and mean power, energy as a rectangle sum, runtime as the
# sampled span plus one period
p = profile_of(trace)
print(p)
print("average/peak ratio:", round(p.avg_to_peak_ratio, 4))

# a cluster's worst-case draw is the sum of the per-node peaks
cluster = aggregate_max([p, profile_of(trace), profile_of(trace)])
print("3 nodes, total peak", cluster.w_max_total, "W, energy", cluster.energy_total, "J")
