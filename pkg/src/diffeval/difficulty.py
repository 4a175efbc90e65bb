"""Ensemble training manifests and per-instance difficulty scores.

A difficulty score is one minus the mean confidence the ensemble assigns
to the instance's gold answer, so instances answered confidently under many
training configurations come out easy and instances answered incorrectly
come out hard. The manifest enumerates the ensemble's training
configurations (partial-data and corrupted-data fractions, one checkpoint
per epoch); training itself happens outside this package, which only
consumes the resulting prediction logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfidenceMatrix, DifficultyVector
from .errors import ManifestError, MissingPredictionsError

PARTIAL_DATA = "partial_data"
CORRUPTED_DATA = "corrupted_data"

# Default schedule: 7 data-size fractions, 5 corruption fractions, 10 epochs
# of checkpoints -> 10 * (7 + 5) = 120 ensemble members.
DEFAULT_DATA_FRACTIONS = (5.0, 10.0, 15.0, 20.0, 25.0, 50.0, 100.0)
DEFAULT_CORRUPTION_FRACTIONS = (2.0, 5.0, 10.0, 20.0, 25.0)
DEFAULT_EPOCHS = 10


def _fraction_tag(fraction: float) -> str:
    if float(fraction).is_integer():
        return f"{int(fraction):03d}"
    return f"{fraction:g}".replace(".", "p")


@dataclass(frozen=True)
class ManifestEntry:
    """One training run: a config kind, its fraction, and a checkpoint epoch."""

    kind: str
    fraction: float
    epoch: int

    @property
    def run_id(self) -> str:
        prefix = "partial" if self.kind == PARTIAL_DATA else "corrupt"
        return f"{prefix}_{_fraction_tag(self.fraction)}_ep{self.epoch:02d}"


@dataclass(frozen=True)
class EnsembleManifest:
    """Declarative schedule of every (configuration, epoch) training run."""

    data_fractions: tuple[float, ...]
    corruption_fractions: tuple[float, ...]
    epochs: int
    entries: tuple[ManifestEntry, ...]

    @property
    def n_models(self) -> int:
        return len(self.entries)

    def entry_keys(self) -> set[tuple[str, float, int]]:
        return {(e.kind, e.fraction, e.epoch) for e in self.entries}

    def run_ids(self) -> tuple[str, ...]:
        return tuple(e.run_id for e in self.entries)


def build_manifest(
    data_fractions=DEFAULT_DATA_FRACTIONS,
    corruption_fractions=DEFAULT_CORRUPTION_FRACTIONS,
    epochs: int = DEFAULT_EPOCHS,
) -> EnsembleManifest:
    """Enumerate every (config, epoch) pair of the ensemble schedule.

    Data fractions must lie in (0, 100], corruption fractions in (0, 100),
    and epochs must be >= 1; each fraction list must be duplicate-free.
    """
    if epochs < 1:
        raise ManifestError(f"epochs must be >= 1, got {epochs}")
    data_fractions = tuple(float(f) for f in data_fractions)
    corruption_fractions = tuple(float(f) for f in corruption_fractions)
    for f in data_fractions:
        if not 0.0 < f <= 100.0:
            raise ManifestError(f"data fraction {f} outside (0, 100]")
    for f in corruption_fractions:
        if not 0.0 < f < 100.0:
            raise ManifestError(f"corruption fraction {f} outside (0, 100)")
    if len(set(data_fractions)) != len(data_fractions):
        raise ManifestError("duplicate data fractions")
    if len(set(corruption_fractions)) != len(corruption_fractions):
        raise ManifestError("duplicate corruption fractions")
    entries = tuple(
        ManifestEntry(kind, fraction, epoch)
        for kind, fractions in (
            (PARTIAL_DATA, data_fractions),
            (CORRUPTED_DATA, corruption_fractions),
        )
        for fraction in fractions
        for epoch in range(1, epochs + 1)
    )
    return EnsembleManifest(data_fractions, corruption_fractions, epochs, entries)


def compute_difficulty(conf: ConfidenceMatrix) -> DifficultyVector:
    """Aggregate gold-answer confidences into difficulty scores.

    score[i] = 1 - mean of present confidences for instance i; n_models[i]
    counts the contributing ensemble members. Missing entries (mask) are
    simply left out of the mean. Column sums use math.fsum (exactly
    rounded), so scores do not depend on model-row order at all.
    """
    if conf.n_instances == 0:
        return DifficultyVector(instance_ids=(), scores=(), n_models=())
    if conf.mask is None:
        counts = np.full(conf.n_instances, conf.n_models, dtype=np.int64)
        sums = [math.fsum(col) for col in conf.values.T.tolist()]
    else:
        counts = conf.mask.sum(axis=0).astype(np.int64)
        if (counts == 0).any():
            gone = [conf.instance_ids[j] for j in np.nonzero(counts == 0)[0]]
            raise MissingPredictionsError(
                f"no predictions at all for instances {gone[:5]}"
            )
        sums = [
            math.fsum(conf.values[conf.mask[:, j], j].tolist())
            for j in range(conf.n_instances)
        ]
    scores = 1.0 - np.array(sums, dtype=np.float64) / counts
    return DifficultyVector(
        instance_ids=conf.instance_ids, scores=scores, n_models=counts
    )


def difficulty_histogram(d: DifficultyVector, bins: int) -> np.ndarray:
    """Counts over equal-width bins of [0, 1]; the last bin is right-closed."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    idx = np.minimum((d.scores * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, minlength=bins)
