"""Numba lane. Same contracts and bit-identical results as _numpy_impl."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _kendall_counts_jit(x, y):  # pragma: no cover - exercised via wrapper
    n = x.shape[0]
    c = 0
    d = 0
    tx = 0
    ty = 0
    for i in range(n):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = xi - x[j]
            dy = yi - y[j]
            if dx == 0.0:
                if dy != 0.0:
                    tx += 1
            elif dy == 0.0:
                ty += 1
            elif (dx > 0.0) == (dy > 0.0):
                c += 1
            else:
                d += 1
    return c, d, tx, ty


def kendall_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    c, d, tx, ty = _kendall_counts_jit(x, y)
    return int(c), int(d), int(tx), int(ty)


@njit(cache=True)
def _banded_draw_jit(shares, pools, budget):  # pragma: no cover
    remaining = pools.copy()
    drawn = np.zeros(3, dtype=np.int64)
    out = np.empty(budget, dtype=np.int8)
    for k in range(1, budget + 1):
        best = 1
        best_deficit = k * shares[1] - drawn[1]
        for band in (0, 2):
            deficit = k * shares[band] - drawn[band]
            if deficit > best_deficit:
                best = band
                best_deficit = deficit
        if remaining[best] == 0:
            if best == 1:
                best = 0 if remaining[0] >= remaining[2] else 2
            elif remaining[1] > 0:
                best = 1
            else:
                best = 2 - best
        out[k - 1] = best
        drawn[best] += 1
        remaining[best] -= 1
    return out


def banded_draw_sequence(
    shares: np.ndarray, pool_sizes: np.ndarray, budget: int
) -> np.ndarray:
    shares = np.ascontiguousarray(shares, dtype=np.float64)
    pools = np.ascontiguousarray(pool_sizes, dtype=np.int64)
    total = int(pools.sum())
    if budget > total:
        raise ValueError(f"budget {budget} exceeds pool total {total}")
    return _banded_draw_jit(shares, pools, int(budget))
