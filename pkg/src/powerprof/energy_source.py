"""Cumulative energy counter providers.

Three providers share one small interface (``domains`` plus
``read_counters()``):

* :class:`PowercapSource` reads the Linux powercap sysfs tree
  (``/sys/class/powercap/intel-rapl:<n>``), top-level zones only.
* :class:`MsrSource` reads the RAPL package energy status register through
  ``/dev/cpu/<cpu>/msr``.
* :class:`ReplaySource` replays a text file, either cumulative energy rows
  or direct power rows, so every downstream stage can be tested without
  hardware.

Counters wrap; :func:`energy_delta` turns two readings into consumed energy
modulo the domain's range.
"""

from __future__ import annotations

import glob
import os
import re
import struct
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, Union

from .errors import (
    DomainMismatch,
    MalformedReplayFile,
    NonMonotonicTime,
    PermissionDenied,
    ReadFailure,
    ReplayExhausted,
    SourceUnavailable,
)

COMPONENT_CLASSES = ("compute", "disk", "net")

POWERCAP_ROOT = Path("/sys/class/powercap")
MSR_ROOT = Path("/dev/cpu")
CPU_TOPOLOGY_ROOT = Path("/sys/devices/system/cpu")

MSR_RAPL_POWER_UNIT = 0x606
MSR_PKG_ENERGY_STATUS = 0x611

ENERGY_HEADER = "#powerprof-energy"
POWER_HEADER = "#powerprof-power"
REPLAY_VERSION = "v1"

_ZONE_RE = re.compile(r"^intel-rapl:(\d+)$")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


@dataclass(frozen=True)
class DomainDescriptor:
    domain_id: str
    name: str
    max_energy_range: float  # microjoules
    component_class: str = "compute"

    def __post_init__(self) -> None:
        if not self.max_energy_range > 0:
            raise ValueError(f"max_energy_range must be > 0, got {self.max_energy_range}")
        if self.component_class not in COMPONENT_CLASSES:
            raise ValueError(f"unknown component class {self.component_class!r}")


@dataclass(frozen=True)
class EnergyReading:
    domain_id: str
    timestamp: float  # ms, monotonic
    energy: float  # cumulative microjoules


@dataclass(frozen=True)
class PowerReading:
    """A direct power observation, produced by power-mode replay files."""

    domain_id: str
    timestamp: float  # ms
    power: float  # watts


Reading = Union[EnergyReading, PowerReading]


@dataclass(frozen=True)
class SourceKind:
    """Which provider to open.

    ``root`` overrides the sysfs/devfs location for powercap and msr, which
    is mostly useful for tests and containers with bind-mounted trees.
    """

    kind: str
    path: Path | None = None
    root: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("powercap", "msr", "replay"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "replay" and self.path is None:
            raise ValueError("replay source needs a path")

    @classmethod
    def parse(cls, text: str) -> SourceKind:
        """Parse ``powercap``, ``msr`` or ``replay:<path>``."""
        text = text.strip()
        if text in ("powercap", "msr"):
            return cls(text)
        if text.startswith("replay:") and len(text) > len("replay:"):
            return cls("replay", path=Path(text[len("replay:"):]))
        raise ValueError(f"bad source {text!r}; expected powercap, msr or replay:<path>")

    def __str__(self) -> str:
        return f"replay:{self.path}" if self.kind == "replay" else self.kind


def energy_delta(prev: EnergyReading, curr: EnergyReading, range_uj: float) -> float:
    """Energy consumed between two readings of one counter, in microjoules.

    The counter is assumed to have wrapped at most once, so the result is
    ``(curr - prev) mod range`` and always lies in ``[0, range)``.
    """
    if prev.domain_id != curr.domain_id:
        raise DomainMismatch(f"{prev.domain_id!r} != {curr.domain_id!r}")
    if curr.timestamp < prev.timestamp:
        raise NonMonotonicTime(f"timestamp went backwards: {prev.timestamp} -> {curr.timestamp}")
    if not range_uj > 0:
        raise ValueError(f"range must be > 0, got {range_uj}")
    for e in (prev.energy, curr.energy):
        if not 0 <= e < range_uj:
            raise ValueError(f"energy {e} outside [0, {range_uj})")
    return (curr.energy - prev.energy) % range_uj


def _now_ms() -> float:
    return time.monotonic_ns() / 1e6


def _read_text(path: Path) -> str:
    try:
        return path.read_text().strip()
    except PermissionError as exc:
        raise PermissionDenied(f"cannot read {path}: {exc}") from exc


class PowercapSource:
    """Top-level RAPL zones exposed through powercap sysfs.

    Subzones (``intel-rapl:0:0`` and deeper) are skipped because their
    energy is already contained in the parent package zone. ``psys`` zones
    are skipped for the same reason: they cover the whole platform,
    packages included.
    """

    mode = "energy"

    def __init__(self, root: Path | str = POWERCAP_ROOT):
        self.root = Path(root)
        if not self.root.is_dir():
            raise SourceUnavailable(f"powercap tree not found at {self.root}")
        zones = []
        for entry in sorted(self.root.iterdir(), key=lambda p: p.name):
            m = _ZONE_RE.match(entry.name)
            if m and (entry / "energy_uj").exists():
                zones.append((int(m.group(1)), entry))
        zones.sort()
        domains = []
        self._files: dict[str, Path] = {}
        for _, zone in zones:
            name = _read_text(zone / "name") if (zone / "name").exists() else zone.name
            if name.startswith("psys"):
                continue
            try:
                rng = float(int(_read_text(zone / "max_energy_range_uj")))
            except (OSError, ValueError) as exc:
                raise SourceUnavailable(f"{zone}: unreadable max_energy_range_uj") from exc
            domains.append(DomainDescriptor(zone.name, name, rng, "compute"))
            self._files[zone.name] = zone / "energy_uj"
        if not domains:
            raise SourceUnavailable(f"no RAPL zones under {self.root}")
        self.domains: list[DomainDescriptor] = domains
        # fail now rather than on the first tick when energy_uj is root-only
        for path in self._files.values():
            _read_text(path)

    def read_counters(self, timestamp: float | None = None) -> list[EnergyReading]:
        ts = _now_ms() if timestamp is None else timestamp
        out = []
        for d in self.domains:
            try:
                raw = _read_text(self._files[d.domain_id])
                out.append(EnergyReading(d.domain_id, ts, int(raw)))
            except PermissionDenied:
                raise
            except (OSError, ValueError) as exc:
                raise ReadFailure(f"{self._files[d.domain_id]}: {exc}") from exc
        return out

    def close(self) -> None:
        pass


def _package_cpus(topology_root: Path) -> list[int]:
    """First logical CPU of each physical package."""
    seen: dict[int, int] = {}
    for path in glob.glob(str(topology_root / "cpu[0-9]*" / "topology" / "physical_package_id")):
        cpu = int(re.search(r"cpu(\d+)", path).group(1))
        try:
            pkg = int(Path(path).read_text().strip())
        except (OSError, ValueError):
            continue
        if pkg not in seen or cpu < seen[pkg]:
            seen[pkg] = cpu
    return [seen[p] for p in sorted(seen)]


def read_msr(path: Path | str, register: int) -> int:
    """Read one 64-bit little-endian MSR value from an msr device node."""
    try:
        fd = os.open(path, os.O_RDONLY)
    except PermissionError as exc:
        raise PermissionDenied(f"cannot open {path}: {exc}") from exc
    except FileNotFoundError as exc:
        raise SourceUnavailable(f"{path} not found (is the msr module loaded?)") from exc
    try:
        data = os.pread(fd, 8, register)
    except OSError as exc:
        raise ReadFailure(f"{path} @ {register:#x}: {exc}") from exc
    finally:
        os.close(fd)
    if len(data) != 8:
        raise ReadFailure(f"{path} @ {register:#x}: short read")
    return struct.unpack("<Q", data)[0]


def rapl_energy_unit(power_unit_register: int) -> float:
    """Energy unit in joules: 0.5 ** ESU, ESU being bits 12:8."""
    return 0.5 ** ((power_unit_register >> 8) & 0x1F)


class MsrSource:
    """Package energy through the RAPL MSRs, one domain per physical package."""

    mode = "energy"

    def __init__(
        self,
        root: Path | str = MSR_ROOT,
        cpus: Sequence[int] | None = None,
        topology_root: Path | str = CPU_TOPOLOGY_ROOT,
    ):
        self.root = Path(root)
        if not self.root.is_dir():
            raise SourceUnavailable(f"no MSR device tree at {self.root}")
        if cpus is None:
            cpus = _package_cpus(Path(topology_root)) or [0]
        self.domains: list[DomainDescriptor] = []
        self._devices: dict[str, Path] = {}
        self._unit_uj: dict[str, float] = {}
        for pkg, cpu in enumerate(cpus):
            dev = self.root / str(cpu) / "msr"
            if not dev.exists():
                raise SourceUnavailable(f"{dev} not found (is the msr module loaded?)")
            unit_uj = rapl_energy_unit(read_msr(dev, MSR_RAPL_POWER_UNIT)) * 1e6
            domain_id = f"msr-cpu{cpu}"
            self.domains.append(
                DomainDescriptor(domain_id, f"package-{pkg}", (1 << 32) * unit_uj, "compute")
            )
            self._devices[domain_id] = dev
            self._unit_uj[domain_id] = unit_uj

    def read_counters(self, timestamp: float | None = None) -> list[EnergyReading]:
        ts = _now_ms() if timestamp is None else timestamp
        out = []
        for d in self.domains:
            raw = read_msr(self._devices[d.domain_id], MSR_PKG_ENERGY_STATUS) & 0xFFFFFFFF
            out.append(EnergyReading(d.domain_id, ts, raw * self._unit_uj[d.domain_id]))
        return out

    def close(self) -> None:
        pass


def _parse_domains(spec: str, where: str) -> list[tuple[str, str]]:
    out = []
    for item in spec.split(","):
        name, _, cls = item.partition(":")
        cls = cls or "compute"
        if not _NAME_RE.match(name):
            raise MalformedReplayFile(f"{where}: bad domain name {name!r}")
        if cls not in COMPONENT_CLASSES:
            raise MalformedReplayFile(f"{where}: unknown class {cls!r} for domain {name!r}")
        out.append((name, cls))
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise MalformedReplayFile(f"{where}: duplicate domain names")
    return out


class ReplaySource:
    """File-backed provider for deterministic, hardware-free runs.

    Energy files::

        #powerprof-energy v1 domains=pkg:compute,dram range_uj=262143328850
        0,pkg=1000,dram=400
        1000,pkg=16001000,dram=2400

    Power files have the same shape with a ``#powerprof-power v1 domains=...``
    header and watts in place of microjoules. Each ``read_counters`` call
    returns the next row; after the last row it raises
    :class:`ReplayExhausted`.
    """

    def __init__(self, path: Path | str):
        self.path = Path(path)
        try:
            text = self.path.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise SourceUnavailable(f"replay file {self.path} not found") from exc
        except PermissionError as exc:
            raise PermissionDenied(f"cannot read {self.path}") from exc
        except (OSError, UnicodeDecodeError) as exc:
            raise MalformedReplayFile(f"{self.path}: {exc}") from exc
        self.mode, self.domains, self._rows = self._parse(text)
        self._pos = 0

    def _parse(self, text: str):
        lines = text.splitlines()
        if not lines:
            raise MalformedReplayFile(f"{self.path}: empty file")
        header = lines[0].split()
        where = f"{self.path}:1"
        if len(header) < 3 or header[0] not in (ENERGY_HEADER, POWER_HEADER):
            raise MalformedReplayFile(f"{where}: missing replay header")
        if header[1] != REPLAY_VERSION:
            raise MalformedReplayFile(f"{where}: unsupported version {header[1]!r}")
        mode = "energy" if header[0] == ENERGY_HEADER else "power"
        fields = {}
        for tok in header[2:]:
            key, eq, value = tok.partition("=")
            if not eq:
                raise MalformedReplayFile(f"{where}: bad header field {tok!r}")
            fields[key] = value
        if "domains" not in fields:
            raise MalformedReplayFile(f"{where}: header lacks domains=")
        declared = _parse_domains(fields["domains"], where)
        if mode == "energy":
            try:
                rng = int(fields["range_uj"])
            except (KeyError, ValueError) as exc:
                raise MalformedReplayFile(f"{where}: energy header needs integer range_uj=") from exc
            if rng <= 0:
                raise MalformedReplayFile(f"{where}: range_uj must be > 0")
        else:
            # power rows never go through energy_delta; the range is nominal
            rng = 1 << 62
        domains = [DomainDescriptor(n, n, rng, c) for n, c in declared]
        names = [n for n, _ in declared]

        rows: list[tuple[int, dict[str, float]]] = []
        last_t = None
        for lineno, line in enumerate(lines[1:], start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            where = f"{self.path}:{lineno}"
            parts = line.split(",")
            try:
                t = int(parts[0])
            except ValueError as exc:
                raise MalformedReplayFile(f"{where}: bad timestamp {parts[0]!r}") from exc
            if t < 0 or (last_t is not None and t <= last_t):
                raise MalformedReplayFile(f"{where}: timestamps must be non-negative and increasing")
            values: dict[str, float] = {}
            for item in parts[1:]:
                name, eq, raw = item.partition("=")
                if not eq or name not in names or name in values:
                    raise MalformedReplayFile(f"{where}: bad field {item!r}")
                try:
                    values[name] = int(raw) if mode == "energy" else float(raw)
                except ValueError as exc:
                    raise MalformedReplayFile(f"{where}: bad value {raw!r}") from exc
                v = values[name]
                if mode == "energy" and not 0 <= v < rng:
                    raise MalformedReplayFile(f"{where}: energy {v} outside [0, {rng})")
                if mode == "power" and not (v >= 0 and v != float("inf")):
                    raise MalformedReplayFile(f"{where}: power must be finite and >= 0")
            if set(values) != set(names):
                raise MalformedReplayFile(f"{where}: row must give every declared domain")
            rows.append((t, values))
            last_t = t
        if not rows:
            raise MalformedReplayFile(f"{self.path}: no data rows")
        return mode, domains, rows

    def __len__(self) -> int:
        return len(self._rows)

    def rewind(self) -> None:
        self._pos = 0

    def read_counters(self, timestamp: float | None = None) -> list[Reading]:
        """Next row of the file; ``timestamp`` is ignored (the file owns time)."""
        if self._pos >= len(self._rows):
            raise ReplayExhausted(f"{self.path}: end of replay after {len(self._rows)} rows")
        t, values = self._rows[self._pos]
        self._pos += 1
        cls = EnergyReading if self.mode == "energy" else PowerReading
        return [cls(d.domain_id, t, values[d.domain_id]) for d in self.domains]

    def __iter__(self) -> Iterator[list[Reading]]:
        while True:
            try:
                yield self.read_counters()
            except ReplayExhausted:
                return

    def close(self) -> None:
        pass


EnergySource = Union[PowercapSource, MsrSource, ReplaySource]


def open_source(kind: SourceKind | str) -> EnergySource:
    if isinstance(kind, str):
        kind = SourceKind.parse(kind)
    if kind.kind == "powercap":
        return PowercapSource(kind.root or POWERCAP_ROOT)
    if kind.kind == "msr":
        return MsrSource(kind.root or MSR_ROOT)
    return ReplaySource(kind.path)


def enumerate_domains(kind: SourceKind | str) -> list[DomainDescriptor]:
    return list(open_source(kind).domains)


def read_counters(source: EnergySource) -> list[Reading]:
    return source.read_counters()


def write_replay(
    path: Path | str,
    rows: Sequence[tuple[int, Sequence[float]]],
    domains: Sequence[tuple[str, str]],
    *,
    mode: str = "energy",
    range_uj: int | None = None,
) -> Path:
    """Write a replay file; ``rows`` are ``(t_ms, values-in-domain-order)``."""
    path = Path(path)
    dom = ",".join(f"{n}:{c}" for n, c in domains)
    if mode == "energy":
        if range_uj is None:
            raise ValueError("energy replay files need range_uj")
        lines = [f"{ENERGY_HEADER} {REPLAY_VERSION} domains={dom} range_uj={int(range_uj)}"]
    elif mode == "power":
        lines = [f"{POWER_HEADER} {REPLAY_VERSION} domains={dom}"]
    else:
        raise ValueError(f"unknown replay mode {mode!r}")
    for t, values in rows:
        if mode == "energy":
            fields = [f"{n}={int(v)}" for (n, _), v in zip(domains, values)]
        else:
            fields = [f"{n}={float(v)!r}" for (n, _), v in zip(domains, values)]
        lines.append(",".join([str(int(t))] + fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
