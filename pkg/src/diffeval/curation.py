"""Flag trivial / potentially erroneous instances and score repair edits.

Instances at the very bottom of the difficulty scale are usually answerable
from shallow cues; instances at the very top are often mislabeled or
ambiguous. Flagging pulls a top-k of each for human review (default 50/50,
matching a manual-inspection workload). Edits are append-only records: a
trivial-hardening edit must keep the gold label and fool the target
predictor; an error-repair edit must actually change something and is
model-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import CorrectnessMatrix, DifficultyVector, align
from .errors import CurationError

TRIVIAL_HARDENING = "trivial_hardening"
ERROR_REPAIR = "error_repair"
GOLD_LABEL_FIELD = "gold_label"

DEFAULT_K_LOW = 50
DEFAULT_K_HIGH = 50


@dataclass(frozen=True)
class FlagSet:
    """Instances flagged for review, with the scores behind the decision.

    ``trivial_ids`` is ordered easiest-first, ``erroneous_candidate_ids``
    hardest-first; the two lists are disjoint by construction.
    """

    trivial_ids: tuple[str, ...]
    erroneous_candidate_ids: tuple[str, ...]
    k_low: int
    k_high: int
    scores: dict[str, float]

    def kind_of(self, instance_id: str) -> str | None:
        if instance_id in self.trivial_ids:
            return "trivial"
        if instance_id in self.erroneous_candidate_ids:
            return "erroneous"
        return None


@dataclass(frozen=True)
class PredictorVerdict:
    """What the target predictor said about an edited instance."""

    predicted_label: str
    confidence: float
    flipped: bool


@dataclass(frozen=True)
class EditRecord:
    """One proposed modification of an instance.

    ``changed_fields`` maps field names (text field names or "gold_label")
    to their new values and must contain only real changes; no-op entries
    are the submitter's bug. Records are append-only; decisions flip
    ``status`` but never rewrite content.
    """

    edit_id: int
    instance_id: str
    edit_kind: str
    changed_fields: Mapping[str, str]
    author: str
    timestamp: str
    predictor_verdict: PredictorVerdict | None = None
    status: str = "proposed"
    rationale: str = ""

    def __post_init__(self):
        if self.edit_kind not in (TRIVIAL_HARDENING, ERROR_REPAIR):
            raise CurationError(f"unknown edit kind {self.edit_kind!r}")
        if self.status not in ("proposed", "accepted", "rejected"):
            raise CurationError(f"unknown edit status {self.status!r}")
        object.__setattr__(self, "changed_fields", dict(self.changed_fields))


def flag_instances(
    d: DifficultyVector, k_low: int = DEFAULT_K_LOW, k_high: int = DEFAULT_K_HIGH
) -> FlagSet:
    """Flag the k_low easiest and k_high hardest instances.

    Ties are broken lexicographically by instance id, so the flag set is
    stable under any score-preserving permutation of the input.
    """
    n = len(d)
    if k_low < 0 or k_high < 0:
        raise CurationError("k_low and k_high must be non-negative")
    if k_low + k_high > n:
        raise CurationError(
            f"k_low + k_high = {k_low + k_high} exceeds {n} instances"
        )
    by_id = dict(zip(d.instance_ids, (float(s) for s in d.scores)))
    order = sorted(range(n), key=lambda j: (d.scores[j], d.instance_ids[j]))
    trivial = [d.instance_ids[j] for j in order[:k_low]]
    hard = [d.instance_ids[j] for j in order[n - k_high:]]
    hard.reverse()
    return FlagSet(
        trivial_ids=tuple(trivial),
        erroneous_candidate_ids=tuple(hard),
        k_low=k_low,
        k_high=k_high,
        scores={i: by_id[i] for i in trivial + hard},
    )


def accept_rule(edit: EditRecord) -> bool:
    """Decide whether an edit qualifies for acceptance.

    Trivial hardening: must fool the predictor (verdict.flipped) while
    leaving the gold label untouched; a verdict is mandatory. Error repair:
    any non-empty change qualifies, no model involved.
    """
    if not edit.changed_fields:
        return False
    if edit.edit_kind == TRIVIAL_HARDENING:
        if edit.predictor_verdict is None:
            raise CurationError(
                "trivial_hardening edits need a predictor verdict before a decision"
            )
        if GOLD_LABEL_FIELD in edit.changed_fields:
            return False
        return edit.predictor_verdict.flipped
    return True


@dataclass(frozen=True)
class ClassDelta:
    """Mean accuracy over candidates x instances, before vs after repair."""

    n_instances: int
    n_candidates: int
    before_accuracy: float
    after_accuracy: float

    @property
    def delta(self) -> float:
        return self.after_accuracy - self.before_accuracy


@dataclass(frozen=True)
class RepairReport:
    """Before/after accuracy per flag class; empty classes are omitted (None)."""

    trivial: ClassDelta | None
    erroneous: ClassDelta | None


def repair_report(
    before: CorrectnessMatrix, after: CorrectnessMatrix, flags: FlagSet
) -> RepairReport:
    """Compare mean accuracy on flagged instances before and after repair."""
    b, a, _, _ = align(before, after)
    deltas: dict[str, ClassDelta | None] = {}
    for key, flagged in (
        ("trivial", flags.trivial_ids),
        ("erroneous", flags.erroneous_candidate_ids),
    ):
        ids = sorted(set(flagged) & set(b.instance_ids))
        if not ids:
            deltas[key] = None
            continue
        sub_b = b.restrict_instances(ids)
        sub_a = a.restrict_instances(ids)
        deltas[key] = ClassDelta(
            n_instances=len(ids),
            n_candidates=b.n_candidates,
            before_accuracy=float(np.mean(sub_b.correct)),
            after_accuracy=float(np.mean(sub_a.correct)),
        )
    return RepairReport(trivial=deltas["trivial"], erroneous=deltas["erroneous"])
