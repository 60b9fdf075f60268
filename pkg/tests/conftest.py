from __future__ import annotations

import struct
import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

from powerprof.collector import NodeTrace, PowerSample
from powerprof.energy_source import MSR_PKG_ENERGY_STATUS, MSR_RAPL_POWER_UNIT

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


def make_powercap_tree(root: Path, zones: dict[str, tuple[str, int, int]]) -> Path:
    """zones: dir name -> (name, energy_uj, max_energy_range_uj)."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "intel-rapl").mkdir(exist_ok=True)
    for zone, (name, energy, rng) in zones.items():
        d = root / zone
        d.mkdir()
        (d / "name").write_text(name + "\n")
        (d / "energy_uj").write_text(f"{energy}\n")
        (d / "max_energy_range_uj").write_text(f"{rng}\n")
    return root


def write_msr(dev: Path, esu: int, energy_raw: int) -> None:
    """Sparse fake msr device: 64-bit registers at their byte offsets."""
    dev.parent.mkdir(parents=True, exist_ok=True)
    buf = bytearray(MSR_PKG_ENERGY_STATUS + 8)
    buf[MSR_RAPL_POWER_UNIT:MSR_RAPL_POWER_UNIT + 8] = struct.pack("<Q", (esu << 8) | 0x3)
    buf[MSR_PKG_ENERGY_STATUS:MSR_PKG_ENERGY_STATUS + 8] = struct.pack("<Q", energy_raw)
    dev.write_bytes(bytes(buf))


def trace_of(powers, period: int = 1000, node_id: str = "n0", **meta) -> NodeTrace:
    return NodeTrace(
        node_id,
        period,
        [PowerSample((i + 1) * period, p) for i, p in enumerate(powers)],
        dict(meta),
    )


# six fractional digits, as stored in trace files
watts = st.integers(min_value=0, max_value=10**9).map(lambda u: u / 10**6)

meta_keys = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Zl", "Zp", "Cc"), blacklist_characters="="),
    min_size=1,
    max_size=12,
)
meta_values = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\n\x0b\x0c\x1c\x1d\x1e\x85  "),
    max_size=20,
)


@st.composite
def node_traces(draw, min_size: int = 1, max_size: int = 60) -> NodeTrace:
    n = draw(st.integers(min_size, max_size))
    gaps = draw(st.lists(st.integers(1, 5000), min_size=n, max_size=n))
    t0 = draw(st.integers(0, 10**6))
    ts, t = [], t0
    for g in gaps:
        ts.append(t)
        t += g
    samples = [PowerSample(t, draw(watts), draw(watts), draw(watts)) for t in ts]
    node_id = draw(st.from_regex(r"[A-Za-z0-9_\-][A-Za-z0-9_.\-]{0,15}", fullmatch=True))
    period = draw(st.integers(10, 60_000))
    metadata = draw(st.dictionaries(meta_keys, meta_values, max_size=4))
    return NodeTrace(node_id, period, samples, metadata)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("tests.test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.summary_line(n))
