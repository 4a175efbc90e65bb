"""Budgeted instance selection: difficulty-banded policy plus baselines.

The banded policy splits instances into low / moderate / high difficulty
bands and spends most of the budget on the moderate band, where instances
actually separate candidate models; a small allotment goes to each extreme
band to distinguish very weak and very strong candidates. Random and
character-length-heuristic selection are the comparison baselines.

Plans are fully deterministic: one seeded permutation per band, budget
units placed by a quota walk (see kernels.banded_draw_sequence), so the
plan for a smaller budget is always a prefix of the plan for a larger one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import math

import numpy as np

from . import kernels
from .core import DifficultyVector, InstanceRecord
from .errors import SelectionError

BAND_NAMES = ("low", "moderate", "high")

DEFAULT_BAND_EDGES = (0.2, 0.8)
DEFAULT_BAND_SHARES = (0.10, 0.80, 0.10)


@dataclass(frozen=True)
class SelectionPolicy:
    """How to pick instances: policy kind, band geometry, shares, seed."""

    kind: str
    band_edges: tuple[float, float] = DEFAULT_BAND_EDGES
    band_shares: tuple[float, float, float] = DEFAULT_BAND_SHARES
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("banded", "random", "length_heuristic"):
            raise SelectionError(f"unknown policy kind {self.kind!r}")
        lo, hi = self.band_edges
        if not (0.0 <= lo < hi <= 1.0):
            raise SelectionError(f"band edges must satisfy 0 <= lo < hi <= 1, got {self.band_edges}")
        shares = tuple(float(s) for s in self.band_shares)
        if len(shares) != 3 or any(s < 0 for s in shares):
            raise SelectionError("band_shares must be three non-negative reals")
        if abs(sum(shares) - 1.0) > 1e-12:
            raise SelectionError(f"band_shares must sum to 1, got {sum(shares)}")
        object.__setattr__(self, "band_edges", (float(lo), float(hi)))
        object.__setattr__(self, "band_shares", shares)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class SelectionPlan:
    """A selected subset with full provenance.

    ``selected_ids`` is in draw order, so the first k entries are exactly
    the plan a budget of k would have produced. ``per_band_counts`` counts
    draws by source band (None for random plans); ``degenerate_fallback``
    marks a length-heuristic plan that fell back to random because every
    instance had the same length.
    """

    selected_ids: tuple[str, ...]
    budget_requested: int
    policy: SelectionPolicy
    per_band_counts: tuple[int, int, int] | None
    degenerate_fallback: bool = False

    def __post_init__(self):
        if len(set(self.selected_ids)) != len(self.selected_ids):
            raise SelectionError("selection plan contains duplicate ids")

    @property
    def n_selected(self) -> int:
        return len(self.selected_ids)


def band_index(scores: np.ndarray, edges: tuple[float, float]) -> np.ndarray:
    """0 = low [0, lo), 1 = moderate [lo, hi], 2 = high (hi, 1]."""
    lo, hi = edges
    return np.where(scores < lo, 0, np.where(scores <= hi, 1, 2)).astype(np.int8)


def _band_permutation(ids: list[str], seed: int, band: int) -> list[str]:
    """Seeded uniform shuffle of a band's ids (sorted first, so the result
    depends only on the id set, not input order)."""
    ids = sorted(ids)
    rng = np.random.default_rng([seed, band])
    return [ids[k] for k in rng.permutation(len(ids))]


def select_banded(
    d: DifficultyVector, budget: int, policy: SelectionPolicy
) -> SelectionPlan:
    """Draw a banded subset of at most ``budget`` instances.

    Budget units are placed on bands by a largest-deficit quota walk
    (moderate favoured on ties); a unit aimed at an exhausted band spills
    to the moderate band first, then to the fuller extreme band. Within a
    band, instances come off a single seeded permutation.
    """
    if policy.kind != "banded":
        raise SelectionError(f"select_banded needs a banded policy, got {policy.kind!r}")
    return _banded_engine(d, budget, policy, degenerate=False)


def _banded_engine(
    d: DifficultyVector, budget: int, policy: SelectionPolicy, degenerate: bool
) -> SelectionPlan:
    if budget < 1:
        raise SelectionError(f"budget must be >= 1, got {budget}")
    n = len(d)
    if n == 0:
        raise SelectionError("cannot select from an empty difficulty vector")
    bands = band_index(d.scores, policy.band_edges)
    pools = [
        _band_permutation(
            [d.instance_ids[j] for j in np.nonzero(bands == b)[0]], policy.seed, b
        )
        for b in range(3)
    ]
    take = min(budget, n)
    seq = kernels.banded_draw_sequence(
        np.array(policy.band_shares), np.array([len(p) for p in pools]), take
    )
    cursors = [0, 0, 0]
    selected: list[str] = []
    for b in seq:
        selected.append(pools[b][cursors[b]])
        cursors[b] += 1
    return SelectionPlan(
        selected_ids=tuple(selected),
        budget_requested=budget,
        policy=policy,
        per_band_counts=(cursors[0], cursors[1], cursors[2]),
        degenerate_fallback=degenerate,
    )


def select_random(ids: Sequence[str], budget: int, seed: int) -> SelectionPlan:
    """Uniform sample without replacement, deterministic for a fixed seed."""
    if budget < 1:
        raise SelectionError(f"budget must be >= 1, got {budget}")
    pool = sorted(ids)
    if not pool:
        raise SelectionError("cannot select from an empty id list")
    if len(set(pool)) != len(pool):
        raise SelectionError("id list contains duplicates")
    rng = np.random.default_rng([seed, 3])
    order = rng.permutation(len(pool))
    take = min(budget, len(pool))
    policy = SelectionPolicy(kind="random", seed=seed)
    return SelectionPlan(
        selected_ids=tuple(pool[k] for k in order[:take]),
        budget_requested=budget,
        policy=policy,
        per_band_counts=None,
    )


def select_length_heuristic(
    instances: Sequence[InstanceRecord], budget: int, policy: SelectionPolicy
) -> SelectionPlan:
    """Banded selection over min-max-normalized character lengths.

    When every instance has the same length the normalization is
    degenerate; the plan falls back to a random draw with the policy seed
    and is flagged accordingly.
    """
    if policy.kind != "length_heuristic":
        raise SelectionError(
            f"select_length_heuristic needs a length_heuristic policy, got {policy.kind!r}"
        )
    if budget < 1:
        raise SelectionError(f"budget must be >= 1, got {budget}")
    if not instances:
        raise SelectionError("cannot select from an empty instance list")
    ids = [r.instance_id for r in instances]
    lengths = np.array([r.char_length for r in instances], dtype=np.float64)
    span = lengths.max() - lengths.min()
    if span == 0.0:
        fallback = select_random(ids, budget, policy.seed)
        return replace(
            fallback, policy=policy, degenerate_fallback=True
        )
    norm = (lengths - lengths.min()) / span
    pseudo = DifficultyVector(
        instance_ids=tuple(ids),
        scores=norm,
        n_models=np.ones(len(ids), dtype=np.int64),
    )
    banded_policy = replace(policy, kind="banded")
    plan = _banded_engine(pseudo, budget, banded_policy, degenerate=False)
    return replace(plan, policy=policy)


def budget_from_percentage(n: int, pct: float) -> int:
    """floor(n * pct / 100); zero is a legal result for tiny percentages."""
    if not 0.0 < pct <= 100.0:
        raise SelectionError(f"percentage must lie in (0, 100], got {pct}")
    if n < 0:
        raise SelectionError(f"n must be non-negative, got {n}")
    return int(math.floor(n * pct / 100.0))
