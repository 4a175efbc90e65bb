"""Shared domain types: instances, confidence/correctness grids, difficulty vectors.

All types are immutable after construction (frozen dataclasses, arrays marked
non-writeable) and canonicalize their instance axis to lexicographic id order,
so every downstream computation is byte-reproducible regardless of input file
order. Constructors validate ranges and shapes; an invalid value is impossible
to observe downstream.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AlignmentError


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


def _check_unique(ids: Sequence[str], what: str) -> None:
    if len(set(ids)) != len(ids):
        seen, dupes = set(), set()
        for i in ids:
            (dupes if i in seen else seen).add(i)
        raise ValueError(f"duplicate {what}: {sorted(dupes)[:5]}")


def _lex_order(ids: Sequence[str]) -> np.ndarray:
    """Permutation that puts ids in lexicographic order."""
    return np.array(sorted(range(len(ids)), key=lambda k: ids[k]), dtype=np.intp)


@dataclass(frozen=True)
class InstanceRecord:
    """A single evaluation instance: named text fields plus a gold label.

    ``char_length`` is the total character count across all text fields.
    Pass -1 (the default) to have it computed; an explicit value is
    validated against the recomputed total.
    """

    instance_id: str
    text_fields: tuple[tuple[str, str], ...]
    gold_label: str
    char_length: int = -1
    split_tag: str = ""

    def __post_init__(self):
        if not self.instance_id:
            raise ValueError("instance_id must be non-empty")
        if not self.gold_label:
            raise ValueError("gold_label must be non-empty")
        if isinstance(self.text_fields, Mapping):
            fields = tuple(self.text_fields.items())
        else:
            fields = tuple((str(k), str(v)) for k, v in self.text_fields)
        object.__setattr__(self, "text_fields", fields)
        _check_unique([k for k, _ in fields], "text field name")
        total = sum(len(v) for _, v in fields)
        if self.char_length < 0:
            object.__setattr__(self, "char_length", total)
        elif self.char_length != total:
            raise ValueError(
                f"char_length {self.char_length} != recomputed total {total} "
                f"for instance {self.instance_id!r}"
            )

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.text_fields)

    def field_text(self, name: str) -> str:
        for k, v in self.text_fields:
            if k == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True)
class ConfidenceMatrix:
    """Ensemble-member x instance grid of gold-answer confidences in [0, 1].

    ``mask`` (True = entry present) marks which predictions exist; every
    instance column must keep at least one present entry. Columns are
    stored in lexicographic instance_id order.
    """

    model_ids: tuple[str, ...]
    instance_ids: tuple[str, ...]
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        model_ids = tuple(self.model_ids)
        instance_ids = tuple(self.instance_ids)
        _check_unique(model_ids, "model_id")
        _check_unique(instance_ids, "instance_id")
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.shape != (len(model_ids), len(instance_ids)):
            raise ValueError(
                f"values shape {values.shape} != "
                f"({len(model_ids)}, {len(instance_ids)})"
            )
        mask = self.mask
        if mask is not None:
            mask = np.array(mask, dtype=bool, copy=True)
            if mask.shape != values.shape:
                raise ValueError("mask shape differs from values shape")
            if mask.all():
                mask = None
        order = _lex_order(instance_ids)
        instance_ids = tuple(instance_ids[k] for k in order)
        values = values[:, order]
        if mask is not None:
            mask = mask[:, order]
        present = values if mask is None else values[mask]
        if present.size and (np.min(present) < 0.0 or np.max(present) > 1.0):
            raise ValueError("confidences must lie in [0, 1]")
        if not np.isfinite(present).all():
            raise ValueError("confidences must be finite")
        if mask is not None and values.shape[1] and not mask.any(axis=0).all():
            empty = [instance_ids[j] for j in np.nonzero(~mask.any(axis=0))[0]]
            raise ValueError(f"instances with no present confidence: {empty[:5]}")
        values.flags.writeable = False
        if mask is not None:
            mask.flags.writeable = False
        object.__setattr__(self, "model_ids", model_ids)
        object.__setattr__(self, "instance_ids", instance_ids)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def n_models(self) -> int:
        return len(self.model_ids)

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    def restrict_instances(self, ids: Sequence[str]) -> "ConfidenceMatrix":
        idx = _restrict_index(self.instance_ids, ids)
        return ConfidenceMatrix(
            model_ids=self.model_ids,
            instance_ids=tuple(ids),
            values=self.values[:, idx],
            mask=None if self.mask is None else self.mask[:, idx],
        )


@dataclass(frozen=True)
class DifficultyVector:
    """Per-instance difficulty scores in [0, 1], lexicographically ordered.

    ``n_models`` records how many ensemble members contributed to each score.
    """

    instance_ids: tuple[str, ...]
    scores: np.ndarray
    n_models: np.ndarray

    def __post_init__(self):
        instance_ids = tuple(self.instance_ids)
        _check_unique(instance_ids, "instance_id")
        scores = np.array(self.scores, dtype=np.float64, copy=True)
        n_models = np.array(self.n_models, dtype=np.int64, copy=True)
        if scores.shape != (len(instance_ids),) or n_models.shape != scores.shape:
            raise ValueError("instance_ids, scores, n_models lengths differ")
        order = _lex_order(instance_ids)
        instance_ids = tuple(instance_ids[k] for k in order)
        scores = scores[order]
        n_models = n_models[order]
        if scores.size and (np.min(scores) < 0.0 or np.max(scores) > 1.0):
            raise ValueError("difficulty scores must lie in [0, 1]")
        if not np.isfinite(scores).all():
            raise ValueError("difficulty scores must be finite")
        if scores.size and np.min(n_models) < 1:
            raise ValueError("n_models entries must be >= 1")
        scores.flags.writeable = False
        n_models.flags.writeable = False
        object.__setattr__(self, "instance_ids", instance_ids)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "n_models", n_models)

    def __len__(self) -> int:
        return len(self.instance_ids)

    def score_of(self, instance_id: str) -> float:
        return float(self.scores[self.instance_ids.index(instance_id)])

    def restrict_instances(self, ids: Sequence[str]) -> "DifficultyVector":
        idx = _restrict_index(self.instance_ids, ids)
        return DifficultyVector(
            instance_ids=tuple(ids),
            scores=self.scores[idx],
            n_models=self.n_models[idx],
        )


@dataclass(frozen=True)
class CorrectnessMatrix:
    """Candidate-model x instance grid of binary predictive correctness."""

    candidate_ids: tuple[str, ...]
    instance_ids: tuple[str, ...]
    correct: np.ndarray

    def __post_init__(self):
        candidate_ids = tuple(self.candidate_ids)
        instance_ids = tuple(self.instance_ids)
        _check_unique(candidate_ids, "candidate_id")
        _check_unique(instance_ids, "instance_id")
        correct = np.array(self.correct, dtype=bool, copy=True)
        if correct.shape != (len(candidate_ids), len(instance_ids)):
            raise ValueError(
                f"correct shape {correct.shape} != "
                f"({len(candidate_ids)}, {len(instance_ids)})"
            )
        order = _lex_order(instance_ids)
        instance_ids = tuple(instance_ids[k] for k in order)
        correct = correct[:, order]
        correct.flags.writeable = False
        object.__setattr__(self, "candidate_ids", candidate_ids)
        object.__setattr__(self, "instance_ids", instance_ids)
        object.__setattr__(self, "correct", correct)

    @property
    def n_candidates(self) -> int:
        return len(self.candidate_ids)

    @property
    def n_instances(self) -> int:
        return len(self.instance_ids)

    def restrict_instances(self, ids: Sequence[str]) -> "CorrectnessMatrix":
        idx = _restrict_index(self.instance_ids, ids)
        return CorrectnessMatrix(
            candidate_ids=self.candidate_ids,
            instance_ids=tuple(ids),
            correct=self.correct[:, idx],
        )


@dataclass(frozen=True)
class WeightingParams:
    """Difficulty-weighting strength. mu = 0 recovers plain accuracy."""

    mu: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu < 0:
            raise ValueError("mu must be a finite non-negative real")


def _restrict_index(have: tuple[str, ...], want: Sequence[str]) -> np.ndarray:
    pos = {iid: k for k, iid in enumerate(have)}
    try:
        return np.array([pos[i] for i in want], dtype=np.intp)
    except KeyError as e:
        raise KeyError(f"unknown instance id {e.args[0]!r}") from None


class AlignedPair(NamedTuple):
    a: object
    b: object
    dropped_a: tuple[str, ...]
    dropped_b: tuple[str, ...]


def _instance_ids_of(obj) -> tuple[str, ...]:
    if hasattr(obj, "instance_ids"):
        return tuple(obj.instance_ids)
    return tuple(r.instance_id for r in obj)


def _restricted(obj, ids: Sequence[str]):
    if hasattr(obj, "restrict_instances"):
        return obj.restrict_instances(ids)
    by_id = {r.instance_id: r for r in obj}
    return tuple(by_id[i] for i in ids)


def align(a, b) -> AlignedPair:
    """Restrict two id-ordered collections to their common instances.

    Accepts any pair of ConfidenceMatrix / DifficultyVector /
    CorrectnessMatrix / sequence-of-InstanceRecord. Both results are
    reordered to the lexicographically sorted id intersection; ids dropped
    from either side are reported. Idempotent.
    """
    ids_a = _instance_ids_of(a)
    ids_b = _instance_ids_of(b)
    common = sorted(set(ids_a) & set(ids_b))
    if not common:
        raise AlignmentError("collections share no instance ids")
    dropped_a = tuple(sorted(set(ids_a) - set(common)))
    dropped_b = tuple(sorted(set(ids_b) - set(common)))
    return AlignedPair(_restricted(a, common), _restricted(b, common), dropped_a, dropped_b)
