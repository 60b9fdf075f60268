"""Paired loop kernels: the same computation before and after optimization.

Each ``base_*`` function is the unoptimized loop written out element by
element, which is what an unoptimizing build executes. Each ``opt_*``
function applies the source transformation (bulk copy, contiguous layout,
flattened loop nest, hoisted invariants) and lets numpy execute the
transformed loop body in bulk. Both variants of a pair must return
identical output.
"""

from __future__ import annotations

import numpy as np

STRIDE = 100
CHUNK = 1 << 16


def make_array(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 1 << 31, size=n, dtype=np.int64)


# copy: element-wise loop vs block copy

def base_copy(src: np.ndarray, repeat: int) -> np.ndarray:
    n = src.size
    for _ in range(repeat):
        dst = np.empty(n, dtype=src.dtype)
        for i in range(n):
            dst[i] = src[i]
    return dst


def opt_copy(src: np.ndarray, repeat: int) -> np.ndarray:
    for _ in range(repeat):
        dst = np.empty(src.size, dtype=src.dtype)
        np.copyto(dst, src)
    return dst


# strided_sum: strided reads vs the same values stored contiguously

def base_strided_sum(values: np.ndarray, count: int, repeat: int) -> int:
    total = 0
    for _ in range(repeat):
        s = 0
        for x in range(0, count * STRIDE, STRIDE):
            s += int(values[x])
        total += s
    return total


def opt_strided_sum(values: np.ndarray, count: int, repeat: int) -> int:
    block = np.ascontiguousarray(values[: count * STRIDE : STRIDE])
    total = 0
    for _ in range(repeat):
        total += int(block.sum())
    return total


def nest_bounds(n: int) -> tuple[int, int, int]:
    """Loop extents ``a = b = n``, ``c = n / 10`` (at least 1)."""
    return n, n, max(1, n // 10)


def _flat_accumulate(total: int, addend: int) -> int:
    result = 0
    for start in range(0, total, CHUNK):
        k = min(CHUNK, total - start)
        result += int(np.full(k, addend, dtype=np.int64).sum())
    return result


# nested_loops: three-deep nest vs one flattened loop

def base_nested_loops(n: int, repeat: int) -> int:
    a, b, c = nest_bounds(n)
    result = 0
    for _ in range(repeat):
        for q1 in range(a):
            for q2 in range(b):
                for q3 in range(c):
                    result += a * b
    return result


def opt_nested_loops(n: int, repeat: int) -> int:
    a, b, c = nest_bounds(n)
    result = 0
    for _ in range(repeat):
        result += _flat_accumulate(a * b * c, a * b)
    return result


# refactor: reference -> value, hoisted boolean, flattened nest

def base_refactor(n: int, repeat: int) -> int:
    a, b, c = nest_bounds(n)
    result = 0
    ref = [a]  # mutable cell standing in for a reference to ``a``
    for _ in range(repeat):
        for q1 in range(a):
            for q2 in range(b):
                for q3 in range(c):
                    if ref[0]:
                        result += a * b
                    if q1 < 1 - 100 and a + 2 < q1 and b * 10 != -1:
                        result += a * b
    return result


def opt_refactor(n: int, repeat: int) -> int:
    a, b, c = nest_bounds(n)
    result = 0
    # q1 >= 0 > 1 - 100, so the guard is false on every iteration
    var = 1 < 1 - 100 and b * 10 != -1
    for _ in range(repeat):
        if a:
            result += _flat_accumulate(a * b * c, a * b)
        if var:
            result += _flat_accumulate(a * b * c, a * b)
    return result
