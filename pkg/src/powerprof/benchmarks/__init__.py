"""Desk-scale benchmark corpus.

Four paired kernels (``copy``, ``strided_sum``, ``nested_loops``,
``refactor``) come in a ``base`` and an ``opt`` variant that compute the
same result; four parallel kernels (``sortstr``, ``dijkstra``, ``koshi``,
``riemann``) take a thread count. Inputs are generated from a seed, and
every run is checked against an independent oracle after the timed region.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import InvalidSpec, OracleMismatch
from . import loops, parallel

PAIRED_KERNELS = ("copy", "strided_sum", "nested_loops", "refactor")
PARALLEL_KERNELS = ("sortstr", "dijkstra", "koshi", "riemann")
KERNELS = PAIRED_KERNELS + PARALLEL_KERNELS
VARIANTS = ("base", "opt")
DEFAULT_SEED = 2023

# (size, repeat) per kernel; each run takes roughly 2-5 s on one desktop core
DEFAULTS: dict[str, tuple[int, int]] = {
    "copy": (100_000, 250),
    "strided_sum": (500, 40_000),
    "nested_loops": (900, 1),
    "refactor": (760, 1),
    "sortstr": (4_000_000, 1),
    "dijkstra": (5_000, 1),
    "koshi": (448, 1),
    "riemann": (4_000_000_000, 1),
}


@dataclass(frozen=True)
class KernelSpec:
    kernel: str
    variant: str | None = None
    size: int | None = None
    threads: int = 1
    repeat: int | None = None
    seed: int = DEFAULT_SEED
    tau: float = parallel.DEFAULT_TAU  # koshi step; sets accuracy and iteration count

    def __post_init__(self) -> None:
        if self.kernel not in KERNELS:
            raise InvalidSpec(f"unknown kernel {self.kernel!r}; choose from {', '.join(KERNELS)}")
        paired = self.kernel in PAIRED_KERNELS
        if paired and self.variant not in VARIANTS:
            raise InvalidSpec(f"{self.kernel} needs variant base or opt")
        if not paired and self.variant is not None:
            raise InvalidSpec(f"{self.kernel} has no variants")
        size, repeat = DEFAULTS[self.kernel]
        if self.size is None:
            object.__setattr__(self, "size", size)
        if self.repeat is None:
            object.__setattr__(self, "repeat", repeat)
        if self.size < 1 or self.threads < 1 or self.repeat < 1:
            raise InvalidSpec("size, threads and repeat must all be >= 1")
        if not (0 < self.tau <= 1):
            raise InvalidSpec("tau must be in (0, 1]")


@dataclass(frozen=True)
class KernelResult:
    wall_time: float  # s, kernel body only
    checksum: str
    ops_performed: int
    output: Any = field(default=None, repr=False, compare=False)


def checksum(output: Any) -> str:
    h = hashlib.sha256()
    if isinstance(output, np.ndarray):
        h.update(str(output.dtype).encode())
        h.update(np.ascontiguousarray(output).tobytes())
    elif isinstance(output, list) and output and isinstance(output[0], str):
        h.update("\n".join(output).encode())
    elif isinstance(output, float):
        h.update(output.hex().encode())
    else:
        h.update(repr(output).encode())
    return h.hexdigest()[:16]


def _prepare(spec: KernelSpec):
    rng = np.random.default_rng(spec.seed)
    n = spec.size
    k = spec.kernel
    if k == "copy":
        return loops.make_array(n, rng)
    if k == "strided_sum":
        return loops.make_array(n * loops.STRIDE, rng)
    if k == "sortstr":
        return parallel.make_strings(n, rng)
    if k == "dijkstra":
        return parallel.make_graph(n, rng)
    if k == "koshi":
        return parallel.make_system(n, rng)
    return None


def _execute(spec: KernelSpec, data):
    n, r, p = spec.size, spec.repeat, spec.threads
    k = spec.kernel
    if k in PAIRED_KERNELS:
        fn = getattr(loops, f"{spec.variant}_{k}")
        if k == "copy":
            return fn(data, r)
        if k == "strided_sum":
            return fn(data, n, r)
        return fn(n, r)
    if k == "sortstr":
        return parallel.sortstr(data, p)
    if k == "dijkstra":
        return parallel.dijkstra(data, p)
    if k == "koshi":
        return parallel.koshi(data, p, spec.tau)
    return parallel.riemann(n, p)


def _ops(spec: KernelSpec) -> int:
    n, r = spec.size, spec.repeat
    k = spec.kernel
    if k in ("copy", "strided_sum"):
        return n * r
    if k in ("nested_loops", "refactor"):
        a, b, c = loops.nest_bounds(n)
        return a * b * c * r
    if k == "sortstr":
        return int(n * max(1.0, math.log2(n)))
    if k == "dijkstra":
        return n * n
    if k == "koshi":
        return parallel.koshi_steps(spec.tau) * n * n
    return n


def verify(spec: KernelSpec, data, output) -> None:
    """Check ``output`` against the kernel's oracle; raise OracleMismatch otherwise."""
    k, n, r = spec.kernel, spec.size, spec.repeat
    if k == "copy":
        ok = output.dtype == data.dtype and np.array_equal(output, data)
    elif k == "strided_sum":
        ok = output == r * sum(data[: n * loops.STRIDE : loops.STRIDE].tolist())
    elif k in ("nested_loops", "refactor"):
        a, b, c = loops.nest_bounds(n)
        ok = output == r * (a * b) * (a * b * c)
    elif k == "sortstr":
        ok = output == sorted(data)
    elif k == "dijkstra":
        ok = output == parallel.dijkstra_reference(data)
    elif k == "koshi":
        # Euler on y' = y with step h has global error below e*h/2 on [0, 1]
        h = 1.0 / parallel.koshi_steps(spec.tau)
        ok = bool(np.all(np.abs(output - math.e) <= math.e * h / 2 * 1.01 + 1e-12))
    else:
        ok = abs(output - 0.5) <= 1.0 / (2 * n)
    if not ok:
        raise OracleMismatch(f"{k} ({spec.variant or 'parallel'}, n={n}) disagrees with its oracle")


def run_kernel(spec: KernelSpec, *, check: bool = True) -> KernelResult:
    data = _prepare(spec)
    t0 = time.perf_counter()
    output = _execute(spec, data)
    wall = time.perf_counter() - t0
    if check:
        verify(spec, data, output)
    return KernelResult(wall, checksum(output), _ops(spec), output)


__all__ = [
    "DEFAULTS",
    "KERNELS",
    "PAIRED_KERNELS",
    "PARALLEL_KERNELS",
    "KernelResult",
    "KernelSpec",
    "checksum",
    "run_kernel",
    "verify",
]
