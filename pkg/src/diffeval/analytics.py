"""Accuracy, rank correlation, selection fidelity, and analysis reports.

Kendall's correlation is the tie-corrected tau-b: candidate accuracies on
small subsets tie frequently, and tau-b is the standard form that stays
meaningful under ties. Weighted accuracy re-weights instances by their
difficulty scores, w_i = (1 + mu*d_i) / (N + mu * sum_j d_j), so a model's
performance on hard instances counts for more as mu grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    CorrectnessMatrix,
    DifficultyVector,
    InstanceRecord,
    WeightingParams,
    align,
)
from .errors import DegenerateRankingError, SelectionError, StatError
from .selection import SelectionPlan


def accuracy(correct) -> float:
    """Fraction of true entries."""
    v = np.asarray(correct, dtype=bool)
    if v.size == 0:
        raise StatError("accuracy of an empty vector is undefined")
    return float(np.sum(v) / v.size)


def kendall_tau(x, y) -> float:
    """Kendall's tau-b between two real vectors.

    tau = (C - D) / sqrt((C + D + Tx) * (C + D + Ty)) where Tx / Ty count
    pairs tied only in x / only in y. Raises DegenerateRankingError when
    either vector is fully tied (denominator zero).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise StatError(f"vectors must be 1-d and equal length, got {x.shape} vs {y.shape}")
    if x.size < 2:
        raise StatError("kendall_tau needs at least two observations")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise StatError("kendall_tau requires finite values")
    c, d, tx, ty = kernels.kendall_counts(x, y)
    denom_x = c + d + tx
    denom_y = c + d + ty
    if denom_x == 0 or denom_y == 0:
        raise DegenerateRankingError(
            "tau undefined: a ranking is fully tied (all values equal)"
        )
    # the pair-count product can exceed 2**63 for long vectors; keep it in
    # float64 instead of letting numpy overflow an int64
    return float((c - d) / np.sqrt(np.float64(denom_x) * np.float64(denom_y)))


def difficulty_weights(scores, params: WeightingParams) -> np.ndarray:
    """Per-instance weights (1 + mu*d_i) / (N + mu * sum_j d_j); sums to 1."""
    d = np.asarray(scores, dtype=np.float64)
    if d.size == 0:
        raise StatError("weights of an empty vector are undefined")
    denom = d.size + params.mu * np.sum(d)
    return (1.0 + params.mu * d) / denom


def weighted_accuracy(correct, scores, params: WeightingParams) -> float:
    """Difficulty-weighted accuracy W = sum_i w_i * v_i.

    Computed in the algebraically equal form
    (sum v + mu * sum d*v) / (N + mu * sum d), which makes W at mu=0
    bit-identical to plain accuracy on the same summation order.
    """
    v = np.asarray(correct, dtype=np.float64)
    d = np.asarray(scores, dtype=np.float64)
    if v.size == 0:
        raise StatError("weighted accuracy of an empty vector is undefined")
    if v.shape != d.shape:
        raise StatError(f"correctness and difficulty lengths differ: {v.shape} vs {d.shape}")
    num = np.sum(v) + params.mu * np.sum(d * v)
    den = v.size + params.mu * np.sum(d)
    return float(num / den)


@dataclass(frozen=True)
class FidelityReport:
    """How faithfully a subset reproduces full-dataset model rankings."""

    policy_kind: str
    budget: int
    n_selected: int
    candidate_ids: tuple[str, ...]
    full_accuracy: tuple[float, ...]
    subset_accuracy: tuple[float, ...]
    kendall_tau: float


def selection_fidelity(v: CorrectnessMatrix, plan: SelectionPlan) -> FidelityReport:
    """Kendall tau-b between per-candidate subset and full-set accuracies."""
    if plan.n_selected == 0:
        raise SelectionError("selection plan is empty")
    if v.n_candidates < 2:
        raise StatError("selection fidelity needs at least two candidates")
    missing = set(plan.selected_ids) - set(v.instance_ids)
    if missing:
        raise SelectionError(
            f"plan ids absent from correctness matrix: {sorted(missing)[:5]}"
        )
    sub = v.restrict_instances(sorted(plan.selected_ids))
    full_acc = v.correct.mean(axis=1)
    sub_acc = sub.correct.mean(axis=1)
    tau = kendall_tau(full_acc, sub_acc)
    return FidelityReport(
        policy_kind=plan.policy.kind,
        budget=plan.budget_requested,
        n_selected=plan.n_selected,
        candidate_ids=v.candidate_ids,
        full_accuracy=tuple(float(a) for a in full_acc),
        subset_accuracy=tuple(float(a) for a in sub_acc),
        kendall_tau=tau,
    )


def ood_correlation_compare(
    in_domain: CorrectnessMatrix,
    d: DifficultyVector,
    params: WeightingParams,
    ood_accuracies,
) -> tuple[float, float]:
    """Compare plain vs difficulty-weighted accuracy as OOD predictors.

    Returns (tau_unweighted, tau_weighted): Kendall tau-b between each
    in-domain accuracy variant and the per-candidate OOD accuracies.
    """
    ood = np.asarray(ood_accuracies, dtype=np.float64)
    if ood.shape != (in_domain.n_candidates,):
        raise StatError(
            f"need one OOD accuracy per candidate, got {ood.shape} for "
            f"{in_domain.n_candidates} candidates"
        )
    if in_domain.n_candidates < 2:
        raise StatError("OOD comparison needs at least two candidates")
    m, dv, _, _ = align(in_domain, d)
    plain = m.correct.mean(axis=1)
    weighted = np.array(
        [weighted_accuracy(row, dv.scores, params) for row in m.correct]
    )
    return kendall_tau(plain, ood), kendall_tau(weighted, ood)


@dataclass(frozen=True)
class RegionReport:
    """Per-difficulty-region accuracy for every candidate.

    ``accuracies[k][b]`` is candidate k's accuracy in bin b (nan when the
    bin is empty); ``best`` lists the top candidate id(s) per bin, None for
    empty bins.
    """

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    candidate_ids: tuple[str, ...]
    accuracies: np.ndarray
    best: tuple[tuple[str, ...] | None, ...]


def region_report(v: CorrectnessMatrix, d: DifficultyVector, bins: int) -> RegionReport:
    """Accuracy per equal-width difficulty region, per candidate."""
    if bins < 1:
        raise StatError(f"bins must be >= 1, got {bins}")
    m, dv, _, _ = align(v, d)
    idx = np.minimum((dv.scores * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    acc = np.full((m.n_candidates, bins), np.nan)
    for b in range(bins):
        cols = idx == b
        if counts[b]:
            acc[:, b] = m.correct[:, cols].sum(axis=1) / counts[b]
    best: list[tuple[str, ...] | None] = []
    for b in range(bins):
        if counts[b] == 0:
            best.append(None)
            continue
        top = acc[:, b].max()
        best.append(
            tuple(m.candidate_ids[k] for k in np.nonzero(acc[:, b] == top)[0])
        )
    acc.flags.writeable = False
    return RegionReport(
        bin_edges=tuple(float(e) for e in np.linspace(0.0, 1.0, bins + 1)),
        counts=tuple(int(cnt) for cnt in counts),
        candidate_ids=m.candidate_ids,
        accuracies=acc,
        best=tuple(best),
    )


@dataclass(frozen=True)
class LabelDifficultyReport:
    """Mean/std/count of difficulty per gold label, labels sorted."""

    labels: tuple[str, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]
    counts: tuple[int, ...]


def label_difficulty_report(
    instances, d: DifficultyVector
) -> LabelDifficultyReport:
    """Per-gold-label difficulty summary (population std)."""
    recs, dv, _, _ = align(list(instances), d)
    by_label: dict[str, list[float]] = {}
    for rec, score in zip(recs, dv.scores):
        by_label.setdefault(rec.gold_label, []).append(float(score))
    labels = tuple(sorted(by_label))
    means, stds, counts = [], [], []
    for lab in labels:
        arr = np.array(by_label[lab])
        means.append(float(arr.mean()))
        stds.append(float(arr.std()))
        counts.append(int(arr.size))
    return LabelDifficultyReport(
        labels=labels, means=tuple(means), stds=tuple(stds), counts=tuple(counts)
    )
