"""Pure-numpy lane. Reference semantics for the numba lane."""

from __future__ import annotations

import numpy as np

# Row-block size for pairwise comparisons; bounds peak memory at
# roughly _BLOCK * n float64 cells per temporary.
_BLOCK = 512


def kendall_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    """Count pair categories for Kendall's tau over all i<j pairs.

    Returns (concordant, discordant, tied_only_x, tied_only_y). Pairs tied
    in both vectors fall in no category.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    c2 = d2 = tx2 = ty2 = 0
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        sx = np.sign(x[lo:hi, None] - x[None, :]).astype(np.int8)
        sy = np.sign(y[lo:hi, None] - y[None, :]).astype(np.int8)
        prod = sx * sy
        c2 += int((prod > 0).sum())
        d2 += int((prod < 0).sum())
        tx2 += int(((sx == 0) & (sy != 0)).sum())
        ty2 += int(((sx != 0) & (sy == 0)).sum())
    # Every unordered pair was visited twice (and the diagonal never counts).
    return c2 // 2, d2 // 2, tx2 // 2, ty2 // 2


def banded_draw_sequence(
    shares: np.ndarray, pool_sizes: np.ndarray, budget: int
) -> np.ndarray:
    """Assign budget units to bands (0=low, 1=moderate, 2=high) one at a time.

    Unit k goes to the band with the largest quota deficit k*share - drawn,
    ties favouring moderate, then low, then high. A unit aimed at an
    exhausted band spills: moderate -> fuller extreme (tie low); extreme ->
    moderate -> other extreme. The sequence for budget b is a prefix of the
    sequence for any larger budget, which is what makes plans nested.
    """
    shares = np.asarray(shares, dtype=np.float64)
    pools = np.asarray(pool_sizes, dtype=np.int64)
    total = int(pools.sum())
    if budget > total:
        raise ValueError(f"budget {budget} exceeds pool total {total}")
    remaining = pools.copy()
    drawn = np.zeros(3, dtype=np.int64)
    out = np.empty(budget, dtype=np.int8)
    for k in range(1, budget + 1):
        best = 1  # moderate wins ties
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
