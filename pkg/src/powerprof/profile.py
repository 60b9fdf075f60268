"""Power profile statistics for one node and for a set of nodes.

Node power at a sample is the sum of its compute, disk and network terms.
Over a run we report the peak (``w_max``), the median (``w_med``), the
mean (``w_avg``) and the energy integrated with the rectangle rule. For ``N``
nodes the worst-case simultaneous peak is the plain sum of node peaks.

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .collector import NodeTrace, PowerSample
from .errors import EmptyList, EmptySeries, EmptyTrace


@dataclass(frozen=True)
class PowerProfile:
    w_max: float  # W
    w_med: float  # W
    w_avg: float  # W
    energy_total: float  # J
    runtime: float  # s
    sample_count: int

    def __post_init__(self) -> None:
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        for name in ("w_max", "w_med", "w_avg", "energy_total", "runtime"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.w_med > self.w_max or self.w_avg > self.w_max:
            raise ValueError(
                f"median/average above peak: w_med={self.w_med} w_avg={self.w_avg} w_max={self.w_max}"
            )

    @property
    def avg_to_peak_ratio(self) -> float | None:
        return self.w_avg / self.w_max if self.w_max > 0 else None

    def rounded(self, ndigits: int = 6) -> PowerProfile:
        return replace(
            self,
            w_max=round(self.w_max, ndigits),
            w_med=round(self.w_med, ndigits),
            w_avg=round(self.w_avg, ndigits),
            energy_total=round(self.energy_total, ndigits),
            runtime=round(self.runtime, ndigits),
        )


@dataclass(frozen=True)
class AggregateProfile:
    """Totals over ``node_count`` nodes.

    The float fields are correctly rounded sums; the exact rational sums are
    kept alongside so that combining partial aggregates gives bit-for-bit the
    same result as aggregating the whole node list at once.
    """

    w_max_total: float
    energy_total: float
    node_count: int
    _peak_exact: Fraction | None = field(default=None, repr=False, compare=False)
    _energy_exact: Fraction | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self._peak_exact is None:
            object.__setattr__(self, "_peak_exact", Fraction(self.w_max_total))
        if self._energy_exact is None:
            object.__setattr__(self, "_energy_exact", Fraction(self.energy_total))

    @classmethod
    def _from_exact(cls, peak: Fraction, energy: Fraction, count: int) -> AggregateProfile:
        return cls(float(peak), float(energy), count, peak, energy)

    def combine(self, other: AggregateProfile) -> AggregateProfile:
        return AggregateProfile._from_exact(
            self._peak_exact + other._peak_exact,
            self._energy_exact + other._energy_exact,
            self.node_count + other.node_count,
        )


def node_power(sample: PowerSample) -> float:
    return sample.compute_w + sample.disk_w + sample.net_w


def node_powers(trace: NodeTrace) -> list[float]:
    return [node_power(s) for s in trace.samples]


def _require_samples(trace: NodeTrace) -> None:
    if not trace.samples:
        raise EmptyTrace(f"node {trace.node_id}: trace has no samples")


def w_max(trace: NodeTrace) -> float:
    _require_samples(trace)
    return max(node_powers(trace))


def w_med(powers: Sequence[float] | np.ndarray) -> float:
    """Median of a power series.

    Odd ``n`` takes the middle order statistic, even ``n`` the mean of the
    two middle ones. Uses selection rather than a full sort; the input is
    left untouched.
    """
    x = np.array(powers, dtype=np.float64)  # copy
    n = x.size
    if n == 0:
        raise EmptySeries("median of an empty series")
    if n % 2:
        mid = n // 2
        return float(np.partition(x, mid)[mid])
    hi = n // 2
    part = np.partition(x, (hi - 1, hi))
    return (float(part[hi - 1]) + float(part[hi])) / 2


def _mean(powers: Sequence[float]) -> float:
    avg = math.fsum(powers) / len(powers)
    # the division can land one ulp outside the data range
    return min(max(avg, min(powers)), max(powers))


def w_avg(trace: NodeTrace) -> float:
    _require_samples(trace)
    return _mean(node_powers(trace))


def sample_intervals(trace: NodeTrace) -> list[float]:
    """Seconds covered by each sample: the gap to the previous sample, one period for the first."""
    _require_samples(trace)
    ts = [s.t for s in trace.samples]
    dts = [trace.period] + [b - a for a, b in zip(ts, ts[1:])]
    return [dt / 1000.0 for dt in dts]


def energy_total(trace: NodeTrace) -> float:
    """Joules, rectangle rule over each sample's preceding interval."""
    _require_samples(trace)
    return math.fsum(p * dt for p, dt in zip(node_powers(trace), sample_intervals(trace)))


def runtime(trace: NodeTrace) -> float:
    _require_samples(trace)
    return (trace.samples[-1].t - trace.samples[0].t + trace.period) / 1000.0


def profile_of(trace: NodeTrace) -> PowerProfile:
    _require_samples(trace)
    powers = node_powers(trace)
    return PowerProfile(
        w_max=max(powers),
        w_med=w_med(powers),
        w_avg=_mean(powers),
        energy_total=energy_total(trace),
        runtime=runtime(trace),
        sample_count=len(powers),
    )


def aggregate_max(profiles: Iterable[PowerProfile]) -> AggregateProfile:
    """Sum node peaks and energies: every node at its peak at the same time."""
    profiles = list(profiles)
    if not profiles:
        raise EmptyList("cannot aggregate an empty list of profiles")
    peak = sum((Fraction(p.w_max) for p in profiles), Fraction(0))
    energy = sum((Fraction(p.energy_total) for p in profiles), Fraction(0))
    return AggregateProfile._from_exact(peak, energy, len(profiles))
