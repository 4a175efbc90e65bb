"""Difficulty-aware evaluation toolkit.

Scores evaluation instances by ensemble difficulty, selects small subsets
whose model rankings track the full dataset, computes difficulty-weighted
accuracy and analysis reports, and drives a human-and-model-in-the-loop
repair workflow for trivial and erroneous instances.
"""

from .core import (
    AlignedPair,
    ConfidenceMatrix,
    CorrectnessMatrix,
    DifficultyVector,
    InstanceRecord,
    WeightingParams,
    align,
)
from .difficulty import (
    DEFAULT_CORRUPTION_FRACTIONS,
    DEFAULT_DATA_FRACTIONS,
    DEFAULT_EPOCHS,
    EnsembleManifest,
    ManifestEntry,
    build_manifest,
    compute_difficulty,
    difficulty_histogram,
)
from .selection import (
    SelectionPlan,
    SelectionPolicy,
    budget_from_percentage,
    select_banded,
    select_length_heuristic,
    select_random,
)
from .analytics import (
    FidelityReport,
    LabelDifficultyReport,
    RegionReport,
    accuracy,
    difficulty_weights,
    kendall_tau,
    label_difficulty_report,
    ood_correlation_compare,
    region_report,
    selection_fidelity,
    weighted_accuracy,
)
from .curation import (
    EditRecord,
    FlagSet,
    PredictorVerdict,
    RepairReport,
    accept_rule,
    flag_instances,
    repair_report,
)
from .simulator import (
    World,
    WorldParams,
    gen_candidate_correctness,
    gen_ensemble_confidences,
    gen_ood,
    gen_world,
)

__version__ = "0.1.0"
