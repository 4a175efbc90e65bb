"""Synthetic one-parameter-logistic world used as a desk-scale oracle.

Every instance carries a latent difficulty b_i, every model an ability a;
P(correct) = sigmoid(a - b_i). Ensemble members derive their ability from
their training configuration: it grows logarithmically with the data
fraction, saturates over epochs, and drops with label corruption, which
qualitatively matches how the real training schedules behave. The latent
values stay recorded on the World so tests can check pipeline outputs
against ground truth. Everything is seeded and deterministic; generation
draws from per-purpose child streams, never shared generator state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import ConfidenceMatrix, CorrectnessMatrix
from .difficulty import EnsembleManifest, ManifestEntry, PARTIAL_DATA

# child-stream tags; one per generated artifact kind
_S_LATENT = 11
_S_ABILITY = 12
_S_CONF = 13
_S_CORRECT = 14
_S_OOD = 15


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=np.float64)))


# A latent-difficulty distribution is a mixture of normals given as
# (weight, loc, scale) components. Crowd-sourced datasets typically pile up
# trivial instances and carry a tail of broken ones; this profile mimics
# that shape for experiments that need it.
STANDARD_NORMAL = ((1.0, 0.0, 1.0),)
DATASET_LIKE = ((0.45, -3.5, 0.8), (0.40, 0.5, 1.2), (0.15, 5.0, 1.0))


@dataclass(frozen=True)
class WorldParams:
    """Generative knobs for a synthetic world.

    ``latent_difficulty`` is a normal-mixture spec (default: one standard
    normal). Candidate abilities sit on an even grid across
    ``candidate_ability_range`` (plus a small jitter), mimicking a fleet of
    models of varying size and training budget; the defaults put the
    strongest candidates near the in-domain ceiling, where only hard
    instances still separate them.
    """

    n_instances: int
    n_candidates: int = 27
    latent_difficulty: tuple[tuple[float, float, float], ...] = STANDARD_NORMAL
    candidate_ability_range: tuple[float, float] = (-0.5, 2.5)
    candidate_ability_jitter: float = 0.05
    candidate_robustness_spread: float = 0.0
    base_ability: float = 0.0
    data_log_gain: float = 0.5
    epoch_gain: float = 0.15
    epoch_saturation: int = 5
    corruption_cost: float = 2.0
    noise_scale: float = 0.05
    confidence_clip: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n_instances < 0 or self.n_candidates < 0:
            raise ValueError("counts must be non-negative")
        comps = tuple(
            (float(w), float(loc), float(scale))
            for w, loc, scale in self.latent_difficulty
        )
        if not comps:
            raise ValueError("latent_difficulty needs at least one component")
        if any(w <= 0 or scale < 0 for w, _, scale in comps):
            raise ValueError("component weights must be > 0 and scales >= 0")
        if abs(sum(w for w, _, _ in comps) - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        object.__setattr__(self, "latent_difficulty", comps)
        for name in (
            "candidate_ability_jitter",
            "candidate_robustness_spread",
            "data_log_gain",
            "epoch_gain",
            "corruption_cost",
            "noise_scale",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.confidence_clip < 0.5:
            raise ValueError("confidence_clip must lie in (0, 0.5)")
        if self.epoch_saturation < 1:
            raise ValueError("epoch_saturation must be >= 1")


@dataclass(frozen=True)
class World:
    """A generated world: latent difficulties, candidate abilities and slopes.

    A candidate answers instance i correctly with probability
    sigmoid(ability - slope * b_i). Slope 1 is the plain one-parameter
    model; slopes below 1 mean robust candidates whose performance degrades
    gently as instances get harder, slopes above 1 the opposite.
    """

    params: WorldParams
    instance_ids: tuple[str, ...]
    latent_difficulty: np.ndarray
    candidate_ids: tuple[str, ...]
    candidate_ability: np.ndarray
    candidate_slope: np.ndarray

    def __post_init__(self):
        for name in ("latent_difficulty", "candidate_ability", "candidate_slope"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def with_latents(self, latents) -> "World":
        """Same world with substituted instance difficulties (for scripted
        edits such as hardening)."""
        latents = np.asarray(latents, dtype=np.float64)
        if latents.shape != self.latent_difficulty.shape:
            raise ValueError("latent shape mismatch")
        return replace(self, latent_difficulty=latents)


def gen_world(params: WorldParams) -> World:
    """Draw a world deterministically from params.seed."""
    rng_b = np.random.default_rng([params.seed, _S_LATENT])
    rng_a = np.random.default_rng([params.seed, _S_ABILITY])
    comps = params.latent_difficulty
    weights = np.array([w for w, _, _ in comps])
    which = rng_b.choice(len(comps), size=params.n_instances, p=weights)
    locs = np.array([loc for _, loc, _ in comps])[which]
    scales = np.array([s for _, _, s in comps])[which]
    b = locs + scales * rng_b.standard_normal(params.n_instances)
    lo, hi = params.candidate_ability_range
    if params.n_candidates == 0:
        grid = np.empty(0)
    elif params.n_candidates == 1:
        grid = np.array([(lo + hi) / 2.0])
    else:
        grid = np.linspace(lo, hi, params.n_candidates)
    a = grid + params.candidate_ability_jitter * rng_a.standard_normal(
        params.n_candidates
    )
    # log-normal around 1 so slopes stay positive; spread 0 pins them at 1
    slopes = np.exp(
        params.candidate_robustness_spread * rng_a.standard_normal(params.n_candidates)
    )
    return World(
        params=params,
        instance_ids=tuple(f"inst_{i:06d}" for i in range(params.n_instances)),
        latent_difficulty=b,
        candidate_ids=tuple(f"cand_{k:02d}" for k in range(params.n_candidates)),
        candidate_ability=a,
        candidate_slope=slopes,
    )


def ensemble_ability(entry: ManifestEntry, params: WorldParams) -> float:
    """Ability of the ensemble member trained under ``entry``.

    Partial-data runs: base + g*log(fraction/100) + h*min(epoch, e_sat).
    Corrupted-data runs train on full data, so the log term vanishes and a
    penalty proportional to the corruption fraction applies instead.
    """
    epochs_effective = min(entry.epoch, params.epoch_saturation)
    ability = params.base_ability + params.epoch_gain * epochs_effective
    if entry.kind == PARTIAL_DATA:
        ability += params.data_log_gain * np.log(entry.fraction / 100.0)
    else:
        ability -= params.corruption_cost * (entry.fraction / 100.0)
    return float(ability)


def gen_ensemble_confidences(
    world: World, manifest: EnsembleManifest
) -> ConfidenceMatrix:
    """Simulated gold-answer confidences for every manifest run.

    c[m, i] = clip(sigmoid(a_m - b_i) + noise, eps, 1 - eps): abilities rise
    with data fraction and epoch and fall with corruption level, exactly as
    the manifest axes intend.
    """
    p = world.params
    abilities = np.array([ensemble_ability(e, p) for e in manifest.entries])
    clean = sigmoid(abilities[:, None] - world.latent_difficulty[None, :])
    if p.noise_scale > 0 and clean.size:
        rng = np.random.default_rng([p.seed, _S_CONF])
        clean = clean + p.noise_scale * rng.standard_normal(clean.shape)
    values = np.clip(clean, p.confidence_clip, 1.0 - p.confidence_clip)
    return ConfidenceMatrix(
        model_ids=manifest.run_ids(),
        instance_ids=world.instance_ids,
        values=values,
    )


def gen_candidate_correctness(
    world: World, deterministic: bool = False
) -> CorrectnessMatrix:
    """Candidate predictions: Bernoulli(sigmoid(a_k - b_i)), seeded.

    In deterministic mode a candidate is correct exactly when its correct-
    answer probability exceeds 0.5 (with unit slopes: ability above the
    instance's latent difficulty), which gives tests an exact counting
    oracle.
    """
    p_correct = sigmoid(
        world.candidate_ability[:, None]
        - world.candidate_slope[:, None] * world.latent_difficulty[None, :]
    )
    if deterministic:
        correct = p_correct > 0.5
    else:
        rng = np.random.default_rng([world.params.seed, _S_CORRECT])
        correct = rng.random(p_correct.shape) < p_correct
    return CorrectnessMatrix(
        candidate_ids=world.candidate_ids,
        instance_ids=world.instance_ids,
        correct=correct,
    )


def gen_ood(
    world: World, shift: float, deterministic: bool = False
) -> CorrectnessMatrix:
    """Correctness on a fresh instance set whose difficulty is shifted.

    The out-of-domain latents are the in-domain ones plus ``shift`` under
    new instance ids, so a positive shift makes the OOD set strictly harder
    instance-for-instance while candidates stay fixed.
    """
    p = world.params
    b_ood = world.latent_difficulty + shift
    p_correct = sigmoid(
        world.candidate_ability[:, None] - world.candidate_slope[:, None] * b_ood[None, :]
    )
    if deterministic:
        correct = p_correct > 0.5
    else:
        rng = np.random.default_rng([p.seed, _S_OOD])
        correct = rng.random(p_correct.shape) < p_correct
    return CorrectnessMatrix(
        candidate_ids=world.candidate_ids,
        instance_ids=tuple(f"ood_{i:06d}" for i in range(len(b_ood))),
        correct=correct,
    )
