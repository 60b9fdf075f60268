"""
Comparing runs before and after optimization
============================================

Rebuild the four before/after measurements of the loop optimizations as
single-node reports and compare them. Peak power goes up after each
optimization while energy goes down.
"""

from powerprof.exporter import Report, compare
from powerprof.profile import PowerProfile, aggregate_max

# (peak W, runtime s, energy J) before and after
rows = {
    "element copy -> block copy": ((13.9, 329.7, 4570.8), (15.8, 46.0, 725.9)),
    "strided access -> sequential": ((13.2, 177.3, 2327.2), (13.6, 158.0, 2146.7)),
    "three loops -> one": ((17.8, 264.3, 4714.3), (20.1, 4.0, 80.0)),
    "combined rewrite": ((17.4, 310.0, 5391.3), (19.0, 4.0, 76.0)),
}


def report(label, peak, runtime, energy):
    # only the peak was measured, so it also fills the median and mean slots
    p = PowerProfile(peak, peak, peak, energy, runtime, 1)
    return Report(label, {}, [("n0", p)], aggregate_max([p]))


for name, (before, after) in rows.items():
    c = compare(report("before", *before), report("after", *after))
    peak = c.metrics["w_max"].delta_pct
    energy = c.metrics["energy_total"].delta_pct
    print(f"{name:30s} peak {peak:+6.1f}%  energy {energy:+6.1f}%")

# the full comparison, as written by `powerprof compare`
print(compare(report("before", *rows["element copy -> block copy"][0]),
              report("after", *rows["element copy -> block copy"][1])).format())
