"""Shared-memory parallel kernels: sortstr, dijkstra, koshi, riemann.

Work is split into ``p`` contiguous blocks handed to a thread pool. Every
kernel combines block results in a fixed order so its output does not
depend on ``p``.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

INF = np.iinfo(np.int64).max // 4
EDGE_PROBABILITY = 0.3
MAX_WEIGHT = 100


def blocks(n: int, p: int) -> list[tuple[int, int]]:
    """``p`` near-equal contiguous ranges covering ``range(n)`` (empty ones dropped)."""
    bounds = np.linspace(0, n, min(p, n) + 1).round().astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]


class _Pool:
    """Runs one callable per block; inline when there is a single block."""

    def __init__(self, workers: int):
        self._ex = ThreadPoolExecutor(workers) if workers > 1 else None

    def map(self, fn, items):
        if self._ex is None:
            return [fn(x) for x in items]
        return list(self._ex.map(fn, items))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        if self._ex is not None:
            self._ex.shutdown()


# sortstr

def make_strings(n: int, rng: np.random.Generator) -> list[str]:
    lengths = rng.integers(4, 17, size=n)
    chars = rng.integers(ord("a"), ord("z") + 1, size=(n, 16), dtype=np.uint8)
    return [row[:k].tobytes().decode("ascii") for row, k in zip(chars, lengths)]


def sortstr(strings: list[str], p: int) -> list[str]:
    """Sort blocks in parallel, then k-way merge them."""
    parts = blocks(len(strings), p)
    with _Pool(len(parts)) as pool:
        runs = pool.map(lambda b: sorted(strings[b[0]:b[1]]), parts)
    return list(heapq.merge(*runs))


# dijkstra

def make_graph(n: int, rng: np.random.Generator) -> np.ndarray:
    """Dense directed weight matrix; ``INF`` marks a missing edge."""
    w = rng.integers(1, MAX_WEIGHT + 1, size=(n, n), dtype=np.int64)
    w[rng.random((n, n)) >= EDGE_PROBABILITY] = INF
    np.fill_diagonal(w, 0)
    return w


def dijkstra(weights: np.ndarray, p: int, source: int = 0) -> list[int]:
    """Dense O(n^2) Dijkstra; each thread relaxes and scans its vertex block.

    Unreachable vertices get distance -1.
    """
    n = weights.shape[0]
    rows = weights.tolist()
    dist = [INF] * n
    done = [False] * n
    dist[source] = 0
    done[source] = True
    parts = blocks(n, p)

    def relax(block: tuple[int, int]) -> tuple[int, int]:
        lo, hi = block
        du = dist[u]
        row = rows[u]
        best, arg = INF, -1
        for v in range(lo, hi):
            if done[v]:
                continue
            w = row[v]
            if w < INF and du + w < dist[v]:
                dist[v] = du + w
            if dist[v] < best:
                best, arg = dist[v], v
        return best, arg

    u = source
    with _Pool(len(parts)) as pool:
        for _ in range(n - 1):
            best, arg = min(pool.map(relax, parts))
            if arg < 0:
                break
            u = arg
            done[u] = True
    return [d if d < INF else -1 for d in dist]


def dijkstra_reference(weights: np.ndarray, source: int = 0) -> list[int]:
    """Serial binary-heap Dijkstra over the same matrix."""
    n = weights.shape[0]
    adj = [np.flatnonzero(weights[u] < INF).tolist() for u in range(n)]
    rows = weights.tolist()
    dist = [INF] * n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v in adj[u]:
            nd = d + rows[u][v]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return [d if d < INF else -1 for d in dist]


# koshi: explicit Euler for y' = M y, y(0) = 1, M row-stochastic

DEFAULT_TAU = 1e-4


def make_system(n: int, rng: np.random.Generator) -> np.ndarray:
    """Row-stochastic coupling matrix, so the exact solution is e^t in every component."""
    m = rng.random((n, n)) + 0.5
    return m / m.sum(axis=1, keepdims=True)


def koshi(m: np.ndarray, p: int, tau: float = DEFAULT_TAU, t_end: float = 1.0) -> np.ndarray:
    """Euler integration over ``[0, t_end]`` with step ``tau``; rows split across threads."""
    n = m.shape[0]
    steps = max(1, int(round(t_end / tau)))
    h = t_end / steps
    y = np.ones(n)
    nxt = np.empty(n)
    parts = blocks(n, p)

    def step(block: tuple[int, int]) -> None:
        lo, hi = block
        # row-wise reductions give the same bits whatever the block split
        nxt[lo:hi] = y[lo:hi] + h * (m[lo:hi] * y).sum(axis=1)

    with _Pool(len(parts)) as pool:
        for _ in range(steps):
            pool.map(step, parts)
            y, nxt = nxt, y
    return y


def koshi_steps(tau: float, t_end: float = 1.0) -> int:
    return max(1, int(round(t_end / tau)))


# riemann: left Riemann sum of f(x) = x over [0, 1]

def riemann(n: int, p: int, chunk: int = 1 << 20) -> float:
    """Midpoint sum of f(x) = x over [0, 1] with ``n`` subintervals.

    f at the midpoint of cell i is (2i + 1) / (2n), so each block
    accumulates the integer numerator exactly and the final value is
    rounded once; the result is independent of ``p``.
    """

    def partial(block: tuple[int, int]) -> int:
        lo, hi = block
        s = 0
        for start in range(lo, hi, chunk):
            s += int(np.arange(2 * start + 1, 2 * min(hi, start + chunk), 2, dtype=np.int64).sum())
        return s

    parts = blocks(n, p)
    with _Pool(len(parts)) as pool:
        numer = sum(pool.map(partial, parts))
    return float(Fraction(numer, 2 * n * n))
