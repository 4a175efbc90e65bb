"""Acceptance suite: one test per release criterion, tolerances pinned.

Exact identities are checked against independent oracles (brute-force pair
counting, explicit-loop means, direct formula substitution); statistical
behaviors run on seeded synthetic worlds, so every run is deterministic.
Each test prints a PASS/FAIL line (visible with -s or in the captured
output).
"""

import json
import math
import time

import numpy as np
from scipy import stats as sps

import diffeval as de
from diffeval import io as dio
from diffeval.cli import main, run_fidelity_sweep
from diffeval.core import ConfidenceMatrix, WeightingParams
from diffeval.curation import EditRecord, PredictorVerdict
from diffeval.errors import (
    DuplicateError,
    MissingPredictionsError,
    ParseError,
)
from diffeval.simulator import DATASET_LIKE


def report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {status}: {name}{suffix}")
    assert ok, f"{name}{suffix}"


# ---------------------------------------------------------------------------


def oracle_tau(x, y):
    """Brute-force pair counting over all i<j pairs via explicit index grids."""
    i, j = np.triu_indices(len(x), k=1)
    dx = np.sign(x[i] - x[j])
    dy = np.sign(y[i] - y[j])
    prod = dx * dy
    c = int(np.sum(prod > 0))
    d = int(np.sum(prod < 0))
    tx = int(np.sum((dx == 0) & (dy != 0)))
    ty = int(np.sum((dx != 0) & (dy == 0)))
    if c + d + tx == 0 or c + d + ty == 0:
        return None
    return (c - d) / math.sqrt((c + d + tx) * (c + d + ty))


def python_loop_tau(x, y):
    """Second, slower oracle: pure-python nested loops."""
    n = len(x)
    c = d = tx = ty = 0
    for a in range(n):
        for b in range(a + 1, n):
            dx = x[a] - x[b]
            dy = y[a] - y[b]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                c += 1
            else:
                d += 1
    return (c - d) / math.sqrt((c + d + tx) * (c + d + ty))


def test_kendall_oracle_1000_pairs():
    t0 = time.time()
    rng = np.random.default_rng(2026)
    checked = 0
    worst = 0.0
    while checked < 1000:
        n = int(rng.integers(2, 201))
        if rng.random() < 0.5:
            x = rng.integers(0, max(2, n // 4), size=n).astype(float)
            y = rng.integers(0, max(2, n // 4), size=n).astype(float)
        else:
            x = rng.normal(size=n)
            y = rng.normal(size=n)
        expected = oracle_tau(x, y)
        if expected is None:
            continue
        got = de.kendall_tau(x, y)
        worst = max(worst, abs(got - expected))
        if checked < 30 and n <= 60:
            assert abs(got - python_loop_tau(x, y)) <= 1e-12
        checked += 1
    elapsed = time.time() - t0
    report(
        "kendall tau matches brute-force oracle on 1000 pairs",
        worst <= 1e-12 and elapsed < 10.0,
        f"max |diff| {worst:.2e}, {elapsed:.1f}s",
    )


def test_weighted_accuracy_identities():
    rng = np.random.default_rng(7)
    bit_equal = True
    sums_ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        v = rng.random(n) < rng.random()
        d = rng.random(n)
        if de.weighted_accuracy(v, d, WeightingParams(mu=0.0)) != de.accuracy(v):
            bit_equal = False
        for mu in (0.0, 0.5, 1.0, 5.0, 50.0):
            w = de.difficulty_weights(d, WeightingParams(mu=mu))
            if abs(w.sum() - 1.0) > 1e-12:
                sums_ok = False
    hand = de.weighted_accuracy([1, 0], [0.0, 1.0], WeightingParams(mu=1.0))
    report(
        "weighted accuracy identities (mu=0 bit-equal, weights sum to 1, hand case)",
        bit_equal and sums_ok and hand == 1.0 / 3.0,
        f"hand example = {hand}",
    )


def test_algorithm_fidelity_difficulty_and_manifest():
    manifest = de.build_manifest()
    structure_ok = (
        manifest.n_models == 120
        and manifest.epochs == 10
        and len(manifest.data_fractions) == 7
        and len(manifest.corruption_fractions) == 5
    )
    rng = np.random.default_rng(11)
    exact = True
    for _ in range(50):
        n_models = int(rng.integers(1, 30))
        n_inst = int(rng.integers(1, 40))
        values = rng.random((n_models, n_inst))
        mask = rng.random((n_models, n_inst)) < 0.85
        mask[0] = True
        conf = ConfidenceMatrix(
            model_ids=tuple(f"m{k:03d}" for k in range(n_models)),
            instance_ids=tuple(f"i{k:04d}" for k in range(n_inst)),
            values=values,
            mask=mask,
        )
        d = de.compute_difficulty(conf)
        for col, iid in enumerate(conf.instance_ids):
            present = [
                float(conf.values[m, col])
                for m in range(n_models)
                if conf.mask is None or conf.mask[m, col]
            ]
            expected = 1.0 - math.fsum(present) / len(present)
            if d.scores[col] != expected or d.n_models[col] != len(present):
                exact = False
    report(
        "difficulty equals explicit-loop mean oracle; default manifest is 120 entries",
        structure_ok and exact,
    )


def test_difficulty_generalization_trend():
    t0 = time.time()
    manifest = de.build_manifest()
    spearman_ok = True
    pair_fractions = []
    for seed in range(20):
        w = de.gen_world(de.WorldParams(n_instances=2000, seed=seed))
        d = de.compute_difficulty(de.gen_ensemble_confidences(w, manifest))
        rho = sps.spearmanr(d.scores, w.latent_difficulty).statistic
        if rho <= 0.95:
            spearman_ok = False
        cor = de.gen_candidate_correctness(w)
        rep = de.region_report(cor, d, 10)
        acc = rep.accuracies
        good = total = 0
        for k in range(acc.shape[0]):
            for b in range(9):
                a1, a2 = acc[k, b], acc[k, b + 1]
                if np.isnan(a1) or np.isnan(a2):
                    continue
                total += 1
                good += a2 <= a1
        pair_fractions.append(good / total)
    frac = float(np.mean(pair_fractions))
    elapsed = time.time() - t0
    report(
        "difficulty generalizes: spearman > 0.95, bin accuracy non-increasing >= 90%",
        spearman_ok and frac >= 0.90 and elapsed < 60.0,
        f"mean adjacent-pair fraction {frac:.3f}, {elapsed:.1f}s",
    )


def test_efficient_evaluation_trend():
    t0 = time.time()
    manifest = de.build_manifest()
    budgets = [1.0, 2.0, 5.0, 10.0, 20.0]
    taus = {(kind, pct): [] for kind in ("banded", "random") for pct in budgets}
    for seed in range(20):
        w = de.gen_world(
            de.WorldParams(n_instances=5000, latent_difficulty=DATASET_LIKE, seed=seed)
        )
        d = de.compute_difficulty(de.gen_ensemble_confidences(w, manifest))
        cor = de.gen_candidate_correctness(w)
        for pct in budgets:
            budget = de.budget_from_percentage(5000, pct)
            plan_b = de.select_banded(d, budget, de.SelectionPolicy(kind="banded", seed=seed))
            plan_r = de.select_random(d.instance_ids, budget, seed)
            taus[("banded", pct)].append(de.selection_fidelity(cor, plan_b).kendall_tau)
            taus[("random", pct)].append(de.selection_fidelity(cor, plan_r).kendall_tau)
    means = {key: float(np.mean(vals)) for key, vals in taus.items()}
    banded_beats_random = all(
        means[("banded", pct)] >= means[("random", pct)] for pct in (1.0, 2.0, 5.0)
    )
    strict_at_1 = float(
        np.mean(np.array(taus[("banded", 1.0)]) > np.array(taus[("random", 1.0)]))
    )
    banded_means = [means[("banded", pct)] for pct in budgets]
    nondecreasing = all(b >= a - 1e-12 for a, b in zip(banded_means, banded_means[1:]))
    elapsed = time.time() - t0
    report(
        "efficient evaluation: banded >= random at small budgets, fidelity grows with budget",
        banded_beats_random and strict_at_1 >= 0.70 and nondecreasing and elapsed < 300.0,
        f"strict wins at 1% = {strict_at_1:.0%}, banded means {['%.3f' % m for m in banded_means]}, {elapsed:.1f}s",
    )


def test_ood_correlation_direction():
    t0 = time.time()
    manifest = de.build_manifest()
    mu_grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]

    def run_seed(seed):
        w = de.gen_world(
            de.WorldParams(n_instances=1500, candidate_robustness_spread=0.3, seed=seed)
        )
        d = de.compute_difficulty(de.gen_ensemble_confidences(w, manifest))
        cor = de.gen_candidate_correctness(w)
        ood_acc = de.gen_ood(w, 1.0).correct.mean(axis=1)
        return {
            mu: de.ood_correlation_compare(cor, d, WeightingParams(mu=mu), ood_acc)
            for mu in mu_grid
        }

    held_out = run_seed(9999)
    best_mu = max(mu_grid, key=lambda m: held_out[m][1] - held_out[m][0])
    improvements = []
    wins = 0
    for seed in range(40):
        tau_u, tau_w = run_seed(seed)[best_mu]
        improvements.append(tau_w - tau_u)
        wins += tau_w >= tau_u
    mean_improvement = float(np.mean(improvements))
    elapsed = time.time() - t0
    report(
        "OOD estimation: weighted accuracy correlates better than plain accuracy",
        wins >= 0.65 * 40 and mean_improvement > 0 and elapsed < 120.0,
        f"mu* = {best_mu}, wins {wins}/40, mean improvement {mean_improvement:+.4f}, {elapsed:.1f}s",
    )


def test_curation_repair_signs():
    manifest = de.build_manifest()
    all_correct_signs = True
    for seed in range(10):
        w = de.gen_world(de.WorldParams(n_instances=2000, seed=seed))
        d = de.compute_difficulty(de.gen_ensemble_confidences(w, manifest))
        flags = de.flag_instances(d, 50, 50)
        before = de.gen_candidate_correctness(w)
        # hardening: raise the latent difficulty of trivially-flagged instances
        idx = {iid: j for j, iid in enumerate(w.instance_ids)}
        b_new = np.array(w.latent_difficulty)
        for iid in flags.trivial_ids:
            b_new[idx[iid]] += 3.0
        hardened = de.gen_candidate_correctness(w.with_latents(b_new))
        # repair: mislabeled instances had inverted correctness; fixing the
        # label flips the stored bits back
        corrected = np.array(hardened.correct)
        cols = {iid: j for j, iid in enumerate(hardened.instance_ids)}
        for iid in flags.erroneous_candidate_ids:
            corrected[:, cols[iid]] = ~corrected[:, cols[iid]]
        after = de.CorrectnessMatrix(
            hardened.candidate_ids, hardened.instance_ids, corrected
        )
        rep = de.repair_report(before, after, flags)
        if not (rep.trivial.delta < 0 and rep.erroneous.delta > 0):
            all_correct_signs = False
    report(
        "curation: hardening lowers trivial accuracy, repair raises erroneous accuracy (10/10 seeds)",
        all_correct_signs,
    )


def test_format_round_trips_and_rejections(tmp_path):
    rng = np.random.default_rng(5)
    payloads = 0
    ok = True

    # difficulty CSVs: 300 payloads
    for k in range(300):
        n = int(rng.integers(1, 25))
        d = de.DifficultyVector(
            instance_ids=tuple(f"x{k}_{i:03d}" for i in range(n)),
            scores=rng.random(n),
            n_models=rng.integers(1, 200, size=n),
        )
        path = tmp_path / "d.csv"
        dio.write_difficulty_csv(d, path)
        back = dio.read_difficulty_csv(path)
        ok &= back.instance_ids == d.instance_ids
        ok &= bool(np.all(np.abs(back.scores - d.scores) <= 5e-7))
        ok &= bool(np.array_equal(back.n_models, d.n_models))
        payloads += 1

    # manifests: 100
    for k in range(100):
        n_data = int(rng.integers(1, 6))
        n_corr = int(rng.integers(0, 5))
        data = list(rng.choice(np.arange(1, 101), size=n_data, replace=False).astype(float))
        corr = list(rng.choice(np.arange(1, 100), size=n_corr, replace=False).astype(float))
        m = de.build_manifest(data, corr, epochs=int(rng.integers(1, 6)))
        path = tmp_path / "m.json"
        dio.write_manifest(m, path)
        ok &= dio.read_manifest(path).entry_keys() == m.entry_keys()
        payloads += 1

    # selection plans: 200
    for k in range(200):
        n = int(rng.integers(2, 40))
        d = de.DifficultyVector(
            instance_ids=tuple(f"p{k}_{i:03d}" for i in range(n)),
            scores=rng.random(n),
            n_models=[1] * n,
        )
        plan = de.select_banded(
            d,
            int(rng.integers(1, n + 4)),
            de.SelectionPolicy(kind="banded", seed=int(rng.integers(0, 10_000))),
        )
        path = tmp_path / "plan.json"
        dio.write_selection_plan(plan, path)
        ok &= dio.read_selection_plan(path) == plan
        payloads += 1

    # flag sets: 100
    for k in range(100):
        n = int(rng.integers(2, 30))
        d = de.DifficultyVector(
            instance_ids=tuple(f"f{k}_{i:03d}" for i in range(n)),
            scores=rng.random(n),
            n_models=[1] * n,
        )
        k_low = int(rng.integers(0, n // 2 + 1))
        k_high = int(rng.integers(0, n - k_low + 1))
        flags = de.flag_instances(d, k_low, k_high)
        path = tmp_path / "flags.json"
        dio.write_flagset(flags, path)
        back = dio.read_flagset(path)
        ok &= back.trivial_ids == flags.trivial_ids
        ok &= back.erroneous_candidate_ids == flags.erroneous_candidate_ids
        payloads += 1

    # edit events: 150
    log_path = tmp_path / "edits.jsonl"
    last = 0
    for k in range(150):
        last += int(rng.integers(1, 4))
        edit = EditRecord(
            edit_id=last,
            instance_id=f"inst{int(rng.integers(0, 50)):03d}",
            edit_kind="trivial_hardening" if rng.random() < 0.5 else "error_repair",
            changed_fields={"premise": f"text {k}"},
            author="fuzz",
            timestamp="2026-08-08T00:00:00+00:00",
            predictor_verdict=PredictorVerdict("yes", round(float(rng.random()), 6),
                                               bool(rng.random() < 0.5)),
        )
        dio.append_edit_event(log_path, dio.edit_to_dict(edit))
        payloads += 1
    events = dio.read_edit_log(log_path)
    ok &= len(events) == 150
    ok &= all(
        dio.edit_to_dict(dio.edit_from_dict(e)) == e for e in events
    )

    # prediction logs: 150
    for k in range(150):
        n_models = int(rng.integers(1, 6))
        n_inst = int(rng.integers(1, 8))
        values = rng.random((n_models, n_inst))
        mask = rng.random((n_models, n_inst)) < 0.8
        mask[0, :] = True
        mask[:, 0] = True
        conf = ConfidenceMatrix(
            model_ids=tuple(f"r{j:02d}" for j in range(n_models)),
            instance_ids=tuple(f"q{k}_{i:03d}" for i in range(n_inst)),
            values=values,
            mask=mask,
        )
        path = tmp_path / "log.jsonl"
        dio.write_prediction_log(
            conf, path, {r: ("partial_data", 100.0, 1) for r in conf.model_ids}
        )
        parsed = dio.read_prediction_log(path)
        src_mask = conf.mask if conf.mask is not None else np.ones(values.shape, bool)
        got_mask = parsed.confidences.mask
        if got_mask is None:
            got_mask = np.ones(parsed.confidences.values.shape, bool)
        ok &= bool(np.array_equal(got_mask, src_mask))
        ok &= bool(
            np.all(np.abs(parsed.confidences.values[src_mask] - conf.values[src_mask]) <= 5e-7)
        )
        payloads += 1

    # corrupted prediction logs must be rejected with a typed, located error
    good = {
        "format_version": 1,
        "run_id": "r1",
        "config": {"kind": "partial_data", "fraction": 100.0, "epoch": 1},
        "instance_id": "a",
        "gold_confidence": 0.5,
    }

    def variant(**kw):
        rec = json.loads(json.dumps(good))
        rec.update(kw)
        return json.dumps(rec)

    corrupt_cases = [
        ("{broken json", ParseError),
        (variant(gold_confidence=1.5), ParseError),
        (variant(gold_confidence="high"), ParseError),
        (json.dumps({"run_id": "r", "instance_id": "x"}), ParseError),
        (variant(format_version=99), ParseError),
        (json.dumps(good) + "\n" + json.dumps(good), DuplicateError),
        ("[1,2,3]", ParseError),
    ]
    rejections = True
    for body, err_type in corrupt_cases:
        path = tmp_path / "bad.jsonl"
        path.write_text(body + "\n", encoding="utf-8")
        try:
            dio.read_prediction_log(path)
            rejections = False
        except err_type as e:
            if getattr(e, "line", None) is None:
                rejections = False
        except Exception:
            rejections = False

    # a gap in strict mode is a typed error too
    gap = tmp_path / "gap.jsonl"
    gap.write_text(
        json.dumps(good)
        + "\n"
        + variant(run_id="r2", instance_id="b")
        + "\n",
        encoding="utf-8",
    )
    try:
        dio.read_prediction_log(gap, strict=True)
        rejections = False
    except MissingPredictionsError:
        pass

    report(
        "format round-trips lossless; corrupted logs rejected with located errors",
        ok and rejections and payloads >= 1000,
        f"{payloads} payloads",
    )


def test_determinism_of_simulate_and_sweeps(tmp_path):
    trees = []
    for name in ("run_a", "run_b"):
        out = tmp_path / name
        code = main([
            "simulate", "--seed", "17", "--n-instances", "400", "--n-candidates", "9",
            "--replicates", "3", "--budget-pcts", "2,5,10",
            "--k-low", "25", "--k-high", "25", "--output-dir", str(out),
        ])
        assert code == 0
        trees.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    identical_trees = trees[0] == trees[1]

    parsed = dio.read_prediction_log(tmp_path / "run_a" / "candidate_log.jsonl")
    d = dio.read_difficulty_csv(tmp_path / "run_a" / "difficulty.csv")
    grids = []
    for workers in (1, 4):
        grid = run_fidelity_sweep(
            parsed.correctness, d, ["banded", "random"], [2.0, 5.0], 3, 17,
            (0.2, 0.8), (0.1, 0.8, 0.1), workers=workers,
        )
        grids.append(dio.canonical_json({"grid": grid}))
    report(
        "byte-identical simulate trees; worker count does not change sweep results",
        identical_trees and grids[0] == grids[1],
        f"{len(trees[0])} files compared",
    )
