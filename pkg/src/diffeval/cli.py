"""Command-line interface.

Subcommands: manifest, score, select, fidelity, report (regions | labels |
ood | repair), flag, simulate, serve. Every run emits a provenance block
(package version, resolved parameters, seeds) alongside its results, and
any two invocations with identical config and inputs produce identical
output bytes.

Configuration precedence: command-line flags > --config file (a flat JSON
object keyed by flag destination names) > built-in defaults.

Exit codes: 0 success, 2 usage errors, and one code per error category
(3 parse, 4 integrity, 5 missing predictions, 6 selection/statistics,
7 manifest, 8 curation, 9 alignment, 10 file system, 1 anything else).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, io as dio
from .analytics import (
    label_difficulty_report,
    ood_correlation_compare,
    region_report,
    selection_fidelity,
)
from .core import ConfidenceMatrix, CorrectnessMatrix, InstanceRecord, WeightingParams, align
from .curation import flag_instances, repair_report
from .difficulty import (
    DEFAULT_CORRUPTION_FRACTIONS,
    DEFAULT_DATA_FRACTIONS,
    DEFAULT_EPOCHS,
    build_manifest,
    compute_difficulty,
)
from .errors import (
    AlignmentError,
    CurationError,
    DegenerateRankingError,
    DiffevalError,
    IntegrityError,
    ManifestError,
    MissingPredictionsError,
    ParseError,
    SelectionError,
    StatError,
)
from .selection import (
    SelectionPolicy,
    budget_from_percentage,
    select_banded,
    select_length_heuristic,
    select_random,
)
from .simulator import (
    DATASET_LIKE,
    STANDARD_NORMAL,
    WorldParams,
    gen_candidate_correctness,
    gen_ensemble_confidences,
    gen_world,
    sigmoid,
)

DEFAULT_BUDGET_PCTS = "0.5,1,2,5,10,20"
DEFAULT_MU_GRID = "0,0.5,1,2,5,10,20,50"
DEFAULT_REPLICATES = 5

_EXIT_CODES = [
    (ParseError, 3),
    (IntegrityError, 4),
    (MissingPredictionsError, 5),
    (SelectionError, 6),
    (DegenerateRankingError, 6),
    (StatError, 6),
    (ManifestError, 7),
    (CurationError, 8),
    (AlignmentError, 9),
]


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip() != ""]


# execution details (paths, worker counts) stay out of provenance so runs
# that must produce identical results also produce identical bytes
_NONSEMANTIC_PARAMS = frozenset({
    "config", "output", "output_dir", "csv", "log", "manifest", "difficulty",
    "instances", "candidate_log", "flags", "before_log", "after_log",
    "ood_accuracies", "data_dir", "workers",
})


def _provenance(command: str, params: dict) -> dict:
    return {
        "tool": "diffeval",
        "version": __version__,
        "command": command,
        "parameters": {
            k: v for k, v in sorted(params.items()) if k not in _NONSEMANTIC_PARAMS
        },
    }


def _write_with_provenance(payload: dict, provenance: dict, path) -> None:
    dio.write_json_document({**payload, "provenance": provenance}, path)


def _load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"config is not valid JSON: {e.msg}", path=path, line=e.lineno)
    if not isinstance(cfg, dict):
        raise ParseError("config must be a JSON object of flag values", path=path)
    return cfg


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults."""
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(config) - set(defaults)
    if unknown:
        raise ParseError(f"config keys not recognized for this command: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(config)
    for key in defaults:
        given = getattr(args, key, None)
        if given is not None:
            merged[key] = given
    return merged


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_manifest(args) -> int:
    p = _resolve(args, {
        "data_fractions": ",".join(str(f) for f in DEFAULT_DATA_FRACTIONS),
        "corruption_fractions": ",".join(str(f) for f in DEFAULT_CORRUPTION_FRACTIONS),
        "epochs": DEFAULT_EPOCHS,
        "output": "manifest.json",
    })
    manifest = build_manifest(
        _floats(p["data_fractions"]), _floats(p["corruption_fractions"]), int(p["epochs"])
    )
    dio.write_manifest(manifest, p["output"])
    print(f"wrote {manifest.n_models}-entry manifest to {p['output']}")
    return 0


def cmd_score(args) -> int:
    p = _resolve(args, {
        "log": None, "manifest": None, "strict": False, "output": "difficulty.csv",
    })
    if not p["log"]:
        raise ParseError("score requires --log")
    manifest = dio.read_manifest(p["manifest"]) if p["manifest"] else None
    parsed = dio.read_prediction_log(p["log"], manifest=manifest, strict=bool(p["strict"]))
    d = compute_difficulty(parsed.confidences)
    dio.write_difficulty_csv(d, p["output"])
    _write_with_provenance(
        {"n_instances": len(d), "n_runs": parsed.confidences.n_models},
        _provenance("score", p),
        str(p["output"]) + ".provenance.json",
    )
    print(f"scored {len(d)} instances from {parsed.confidences.n_models} runs -> {p['output']}")
    return 0


def _policy_from(p: dict, kind: str) -> SelectionPolicy:
    return SelectionPolicy(
        kind=kind,
        band_edges=tuple(_floats(p["band_edges"])),
        band_shares=tuple(_floats(p["band_shares"])),
        seed=int(p["seed"]),
    )


def cmd_select(args) -> int:
    p = _resolve(args, {
        "difficulty": None, "instances": None, "policy": "banded",
        "budget": None, "budget_pct": None,
        "band_edges": "0.2,0.8", "band_shares": "0.1,0.8,0.1",
        "seed": 0, "output": "plan.json",
    })
    if not p["difficulty"] and p["policy"] != "length_heuristic":
        raise ParseError("select requires --difficulty")
    d = dio.read_difficulty_csv(p["difficulty"]) if p["difficulty"] else None
    if p["budget"] is None and p["budget_pct"] is None:
        raise ParseError("select requires --budget or --budget-pct")
    if p["budget"] is not None and p["budget_pct"] is not None:
        raise ParseError("--budget and --budget-pct conflict; give exactly one")
    instances = tuple(dio.read_instances(p["instances"])) if p["instances"] else None
    n = len(d) if d is not None else len(instances or ())
    budget = (
        int(p["budget"]) if p["budget"] is not None
        else budget_from_percentage(n, float(p["budget_pct"]))
    )
    if budget == 0:
        raise SelectionError("requested percentage selects 0 instances")
    kind = p["policy"]
    if kind == "banded":
        plan = select_banded(d, budget, _policy_from(p, "banded"))
    elif kind == "random":
        plan = select_random(d.instance_ids, budget, int(p["seed"]))
    elif kind == "length_heuristic":
        if instances is None:
            raise ParseError("length_heuristic needs --instances")
        plan = select_length_heuristic(instances, budget, _policy_from(p, "length_heuristic"))
    else:
        raise ParseError(f"unknown policy {kind!r}")
    dio.write_selection_plan(plan, p["output"])
    _write_with_provenance(
        {"n_selected": plan.n_selected}, _provenance("select", p),
        str(p["output"]) + ".provenance.json",
    )
    print(f"selected {plan.n_selected} instances ({kind}) -> {p['output']}")
    return 0


# fidelity sweep: module-level worker state so ProcessPoolExecutor forks see it
_SWEEP_CTX: dict = {}


def _run_sweep_cell(cell: tuple[str, float, int]) -> tuple[tuple, float | None]:
    policy_kind, pct, rep = cell
    v: CorrectnessMatrix = _SWEEP_CTX["correctness"]
    d = _SWEEP_CTX["difficulty"]
    instances = _SWEEP_CTX["instances"]
    base_seed = _SWEEP_CTX["seed"]
    edges = _SWEEP_CTX["band_edges"]
    shares = _SWEEP_CTX["band_shares"]
    seed = base_seed + rep
    budget = budget_from_percentage(v.n_instances, pct)
    if budget == 0:
        return cell, None
    if policy_kind == "banded":
        plan = select_banded(
            d, budget,
            SelectionPolicy(kind="banded", band_edges=edges, band_shares=shares, seed=seed),
        )
    elif policy_kind == "random":
        plan = select_random(d.instance_ids, budget, seed)
    elif policy_kind == "length_heuristic":
        plan = select_length_heuristic(
            instances, budget,
            SelectionPolicy(kind="length_heuristic", band_edges=edges,
                            band_shares=shares, seed=seed),
        )
    else:
        raise SelectionError(f"unknown policy {policy_kind!r}")
    try:
        tau = selection_fidelity(v, plan).kendall_tau
    except DegenerateRankingError:
        tau = None
    return cell, tau


def run_fidelity_sweep(
    correctness: CorrectnessMatrix,
    difficulty,
    policies: list[str],
    budget_pcts: list[float],
    replicates: int,
    seed: int,
    band_edges: tuple[float, float],
    band_shares: tuple[float, float, float],
    instances=None,
    workers: int = 1,
) -> list[dict]:
    """Grid of mean/std fidelity per (policy, budget percentage).

    Cells are independent; results are merged by key, so the grid is
    identical for any worker count.
    """
    v, d, _, _ = align(correctness, difficulty)
    _SWEEP_CTX.update(
        correctness=v, difficulty=d, instances=instances, seed=seed,
        band_edges=band_edges, band_shares=band_shares,
    )
    cells = [
        (kind, pct, rep)
        for kind in policies
        for pct in budget_pcts
        for rep in range(replicates)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_run_sweep_cell, cells))
    else:
        results = dict(map(_run_sweep_cell, cells))
    grid = []
    for kind in policies:
        for pct in budget_pcts:
            taus = [results[(kind, pct, rep)] for rep in range(replicates)]
            usable = [t for t in taus if t is not None]
            budget = budget_from_percentage(v.n_instances, pct)
            cell = {
                "policy": kind,
                "budget_pct": pct,
                "budget": budget,
                "n_replicates": len(usable),
                "taus": usable,
                "mean_tau": float(np.mean(usable)) if usable else None,
                "std_tau": float(np.std(usable)) if usable else None,
            }
            if budget == 0:
                cell["note"] = "0 selected instances"
            grid.append(cell)
    return grid


def _fidelity_csv(grid: list[dict]) -> str:
    lines = ["policy,budget_pct,budget,mean_tau,std_tau,n_replicates"]
    for cell in grid:
        mean = "" if cell["mean_tau"] is None else f"{cell['mean_tau']:.6f}"
        std = "" if cell["std_tau"] is None else f"{cell['std_tau']:.6f}"
        lines.append(
            f"{cell['policy']},{cell['budget_pct']:g},{cell['budget']},"
            f"{mean},{std},{cell['n_replicates']}"
        )
    return "\n".join(lines) + "\n"


def cmd_fidelity(args) -> int:
    p = _resolve(args, {
        "candidate_log": None, "difficulty": None, "instances": None,
        "policies": "banded,random", "budget_pcts": DEFAULT_BUDGET_PCTS,
        "replicates": DEFAULT_REPLICATES, "seed": 0,
        "band_edges": "0.2,0.8", "band_shares": "0.1,0.8,0.1",
        "workers": 1, "output": "fidelity.json", "csv": None,
    })
    if not p["candidate_log"] or not p["difficulty"]:
        raise ParseError("fidelity requires --candidate-log and --difficulty")
    parsed = dio.read_prediction_log(p["candidate_log"])
    if parsed.correctness is None:
        raise ParseError(
            f"{p['candidate_log']} carries no 'correct' fields; fidelity needs correctness"
        )
    d = dio.read_difficulty_csv(p["difficulty"])
    policies = [s.strip() for s in p["policies"].split(",") if s.strip()]
    instances = tuple(dio.read_instances(p["instances"])) if p["instances"] else None
    if "length_heuristic" in policies and instances is None:
        raise ParseError("length_heuristic policy needs --instances")
    grid = run_fidelity_sweep(
        parsed.correctness, d, policies, _floats(p["budget_pcts"]),
        int(p["replicates"]), int(p["seed"]),
        tuple(_floats(p["band_edges"])), tuple(_floats(p["band_shares"])),
        instances=instances, workers=int(p["workers"]),
    )
    _write_with_provenance({"grid": grid}, _provenance("fidelity", p), p["output"])
    if p["csv"]:
        Path(p["csv"]).write_text(_fidelity_csv(grid), encoding="utf-8")
    print(f"fidelity grid ({len(grid)} cells) -> {p['output']}")
    return 0


def cmd_flag(args) -> int:
    p = _resolve(args, {
        "difficulty": None, "k_low": 50, "k_high": 50, "output": "flags.json",
    })
    if not p["difficulty"]:
        raise ParseError("flag requires --difficulty")
    d = dio.read_difficulty_csv(p["difficulty"])
    flags = flag_instances(d, int(p["k_low"]), int(p["k_high"]))
    dio.write_flagset(flags, p["output"])
    print(
        f"flagged {len(flags.trivial_ids)} trivial + "
        f"{len(flags.erroneous_candidate_ids)} erroneous-candidate -> {p['output']}"
    )
    return 0


def cmd_report_regions(args) -> int:
    p = _resolve(args, {
        "candidate_log": None, "difficulty": None, "bins": 10, "output": "regions.json",
    })
    if not p["candidate_log"] or not p["difficulty"]:
        raise ParseError("report regions requires --candidate-log and --difficulty")
    parsed = dio.read_prediction_log(p["candidate_log"])
    if parsed.correctness is None:
        raise ParseError("candidate log carries no 'correct' fields")
    d = dio.read_difficulty_csv(p["difficulty"])
    rep = region_report(parsed.correctness, d, int(p["bins"]))
    payload = {
        "bin_edges": list(rep.bin_edges),
        "counts": list(rep.counts),
        "candidate_ids": list(rep.candidate_ids),
        "accuracies": [
            [None if np.isnan(a) else float(a) for a in row] for row in rep.accuracies
        ],
        "best": [None if b is None else list(b) for b in rep.best],
    }
    _write_with_provenance(payload, _provenance("report regions", p), p["output"])
    print(f"region report ({int(p['bins'])} bins) -> {p['output']}")
    return 0


def cmd_report_labels(args) -> int:
    p = _resolve(args, {
        "instances": None, "difficulty": None, "output": "labels.json",
    })
    if not p["instances"] or not p["difficulty"]:
        raise ParseError("report labels requires --instances and --difficulty")
    instances = dio.read_instances(p["instances"])
    d = dio.read_difficulty_csv(p["difficulty"])
    rep = label_difficulty_report(instances, d)
    payload = {
        "labels": [
            {"label": lab, "mean_difficulty": m, "std": s, "count": c}
            for lab, m, s, c in zip(rep.labels, rep.means, rep.stds, rep.counts)
        ]
    }
    _write_with_provenance(payload, _provenance("report labels", p), p["output"])
    print(f"label report ({len(rep.labels)} labels) -> {p['output']}")
    return 0


def _read_accuracy_csv(path) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "candidate_id,accuracy":
            raise ParseError(
                f"header mismatch: expected 'candidate_id,accuracy', got {header!r}",
                path=path, line=1,
            )
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 2 columns, got {len(parts)}", path=path, line=lineno)
            try:
                value = float(parts[1])
            except ValueError:
                raise ParseError(f"malformed accuracy {parts[1]!r}", path=path, line=lineno)
            if parts[0] in out:
                raise ParseError(f"duplicate candidate {parts[0]!r}", path=path, line=lineno)
            out[parts[0]] = value
    if not out:
        raise ParseError("no rows in accuracy CSV", path=path)
    return out


def cmd_report_ood(args) -> int:
    p = _resolve(args, {
        "candidate_log": None, "difficulty": None, "ood_accuracies": None,
        "mu_grid": DEFAULT_MU_GRID, "output": "ood.json",
    })
    for key in ("candidate_log", "difficulty", "ood_accuracies"):
        if not p[key]:
            raise ParseError(f"report ood requires --{key.replace('_', '-')}")
    parsed = dio.read_prediction_log(p["candidate_log"])
    if parsed.correctness is None:
        raise ParseError("candidate log carries no 'correct' fields")
    d = dio.read_difficulty_csv(p["difficulty"])
    ood_by_id = _read_accuracy_csv(p["ood_accuracies"])
    v = parsed.correctness
    missing = set(v.candidate_ids) - set(ood_by_id)
    if missing:
        raise AlignmentError(f"OOD accuracies missing for candidates {sorted(missing)[:5]}")
    ood = [ood_by_id[c] for c in v.candidate_ids]
    rows = []
    for mu in _floats(p["mu_grid"]):
        tau_u, tau_w = ood_correlation_compare(v, d, WeightingParams(mu=mu), ood)
        rows.append({"mu": mu, "tau_unweighted": tau_u, "tau_weighted": tau_w,
                     "improvement": tau_w - tau_u})
    _write_with_provenance({"sweep": rows}, _provenance("report ood", p), p["output"])
    print(f"OOD correlation sweep ({len(rows)} mu values) -> {p['output']}")
    return 0


def cmd_report_repair(args) -> int:
    p = _resolve(args, {
        "before_log": None, "after_log": None, "flags": None, "output": "repair.json",
    })
    for key in ("before_log", "after_log", "flags"):
        if not p[key]:
            raise ParseError(f"report repair requires --{key.replace('_', '-')}")
    before = dio.read_prediction_log(p["before_log"]).correctness
    after = dio.read_prediction_log(p["after_log"]).correctness
    if before is None or after is None:
        raise ParseError("repair logs must carry 'correct' fields")
    flags = dio.read_flagset(p["flags"])
    rep = repair_report(before, after, flags)
    payload = {}
    for name, delta in (("trivial", rep.trivial), ("erroneous", rep.erroneous)):
        payload[name] = None if delta is None else {
            "n_instances": delta.n_instances,
            "n_candidates": delta.n_candidates,
            "before_accuracy": delta.before_accuracy,
            "after_accuracy": delta.after_accuracy,
            "delta": delta.delta,
        }
    _write_with_provenance(payload, _provenance("report repair", p), p["output"])
    print(f"repair report -> {p['output']}")
    return 0


def _synthetic_instances(world, seed: int) -> tuple[InstanceRecord, ...]:
    labels = ("label_a", "label_b", "label_c")
    out = []
    for i, iid in enumerate(world.instance_ids):
        filler = " ".join(["token"] * (1 + (i * 7 + seed) % 40))
        out.append(
            InstanceRecord(
                instance_id=iid,
                text_fields=(("prompt", f"synthetic case {i}: {filler}"),),
                gold_label=labels[i % len(labels)],
                split_tag="synthetic",
            )
        )
    return tuple(out)


def cmd_simulate(args) -> int:
    p = _resolve(args, {
        "seed": 0, "n_instances": 2000, "n_candidates": 27,
        "profile": "standard_normal", "robustness_spread": 0.0,
        "budget_pcts": DEFAULT_BUDGET_PCTS, "replicates": DEFAULT_REPLICATES,
        "k_low": 50, "k_high": 50, "workers": 1, "output_dir": "simulated",
    })
    profiles = {"standard_normal": STANDARD_NORMAL, "dataset_like": DATASET_LIKE}
    if p["profile"] not in profiles:
        raise ParseError(f"profile must be one of {sorted(profiles)}, got {p['profile']!r}")
    outdir = Path(p["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    seed = int(p["seed"])

    manifest = build_manifest()
    dio.write_manifest(manifest, outdir / "manifest.json")

    world = gen_world(WorldParams(
        n_instances=int(p["n_instances"]),
        n_candidates=int(p["n_candidates"]),
        latent_difficulty=profiles[p["profile"]],
        candidate_robustness_spread=float(p["robustness_spread"]),
        seed=seed,
    ))
    instances = _synthetic_instances(world, seed)
    dio.write_instances(instances, outdir / "instances.jsonl")

    conf = gen_ensemble_confidences(world, manifest)
    configs = {e.run_id: (e.kind, e.fraction, e.epoch) for e in manifest.entries}
    dio.write_prediction_log(conf, outdir / "ensemble_log.jsonl", configs)

    parsed = dio.read_prediction_log(outdir / "ensemble_log.jsonl", manifest=manifest)
    d = compute_difficulty(parsed.confidences)
    dio.write_difficulty_csv(d, outdir / "difficulty.csv")

    # candidate logs reuse the prediction-log format: confidence is the
    # model's gold-answer probability, correct its sampled prediction
    correctness = gen_candidate_correctness(world)
    cand_configs = {c: ("partial_data", 100.0, 1) for c in world.candidate_ids}
    probs = sigmoid(
        world.candidate_ability[:, None]
        - world.candidate_slope[:, None] * world.latent_difficulty[None, :]
    )
    cand_matrix = ConfidenceMatrix(
        model_ids=world.candidate_ids,
        instance_ids=world.instance_ids,
        values=np.clip(probs, 0.01, 0.99),
    )
    dio.write_prediction_log(
        cand_matrix, outdir / "candidate_log.jsonl", cand_configs, correctness=correctness
    )

    flags = flag_instances(d, int(p["k_low"]), int(p["k_high"]))
    dio.write_flagset(flags, outdir / "flags.json")

    cand_parsed = dio.read_prediction_log(outdir / "candidate_log.jsonl")
    grid = run_fidelity_sweep(
        cand_parsed.correctness, d,
        ["banded", "random", "length_heuristic"],
        _floats(p["budget_pcts"]), int(p["replicates"]), seed,
        (0.2, 0.8), (0.1, 0.8, 0.1),
        instances=instances, workers=int(p["workers"]),
    )
    _write_with_provenance({"grid": grid}, _provenance("simulate", p), outdir / "fidelity.json")
    (outdir / "fidelity.csv").write_text(_fidelity_csv(grid), encoding="utf-8")
    print(f"simulated pipeline (seed {seed}) -> {outdir}")
    return 0


def cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import HttpPredictor, StubPredictor, WorkbenchState, create_app

    p = _resolve(args, {
        "addr": os.environ.get("ILDAE_ADDR", "127.0.0.1:8321"),
        "predictor_url": os.environ.get("ILDAE_PREDICTOR_URL", ""),
        "data_dir": os.environ.get("ILDAE_DATA_DIR", "."),
        "token": os.environ.get("ILDAE_TOKEN", ""),
        "stub_seed": 0,
        "ui_dir": "",
    })
    data_dir = Path(p["data_dir"])
    instances = dio.read_instances(data_dir / "instances.jsonl")
    difficulty = dio.read_difficulty_csv(data_dir / "difficulty.csv")
    flags = dio.read_flagset(data_dir / "flags.json")
    predictor = (
        HttpPredictor(p["predictor_url"]) if p["predictor_url"]
        else StubPredictor(seed=int(p["stub_seed"]))
    )
    state = WorkbenchState(
        instances=list(instances),
        difficulty=difficulty,
        flags=flags,
        predictor=predictor,
        edit_log_path=data_dir / "edits.jsonl",
        token=p["token"] or None,
    )
    host, _, port = p["addr"].rpartition(":")
    app = create_app(state, static_dir=p["ui_dir"] or None)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffeval",
        description="Difficulty-aware evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"diffeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON file of flag defaults (flags win)")

    sp = sub.add_parser("manifest", help="write the ensemble training manifest")
    add_common(sp)
    sp.add_argument("--data-fractions", dest="data_fractions",
                    help="comma list of data-size percentages")
    sp.add_argument("--corruption-fractions", dest="corruption_fractions",
                    help="comma list of corruption percentages")
    sp.add_argument("--epochs", type=int, help="checkpoints per configuration")
    sp.add_argument("--output", help="manifest path")
    sp.set_defaults(func=cmd_manifest)

    sp = sub.add_parser("score", help="compute difficulty scores from a prediction log")
    add_common(sp)
    sp.add_argument("--log", help="prediction log (ndjson)")
    sp.add_argument("--manifest", help="manifest to validate configs against")
    sp.add_argument("--strict", action="store_const", const=True,
                    help="error on any missing (run, instance) pair")
    sp.add_argument("--output", help="difficulty CSV path")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("select", help="select an evaluation subset")
    add_common(sp)
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--instances", help="instances ndjson (for length_heuristic)")
    sp.add_argument("--policy", choices=["banded", "random", "length_heuristic"],
                    help="selection policy")
    sp.add_argument("--budget", type=int, help="absolute instance budget")
    sp.add_argument("--budget-pct", dest="budget_pct", type=float,
                    help="budget as a percentage of the dataset")
    sp.add_argument("--band-edges", dest="band_edges", help="lo,hi difficulty edges")
    sp.add_argument("--band-shares", dest="band_shares", help="low,moderate,high shares")
    sp.add_argument("--seed", type=int, help="sampling seed")
    sp.add_argument("--output", help="plan path")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("fidelity", help="sweep subset fidelity over policies and budgets")
    add_common(sp)
    sp.add_argument("--candidate-log", dest="candidate_log",
                    help="prediction log with 'correct' fields")
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--instances", help="instances ndjson (for length_heuristic)")
    sp.add_argument("--policies", help="comma list: banded,random,length_heuristic")
    sp.add_argument("--budget-pcts", dest="budget_pcts", help="comma list of percentages")
    sp.add_argument("--replicates", type=int, help="seed replicates per cell")
    sp.add_argument("--seed", type=int, help="base seed (replicate r uses seed+r)")
    sp.add_argument("--band-edges", dest="band_edges", help="lo,hi difficulty edges")
    sp.add_argument("--band-shares", dest="band_shares", help="low,moderate,high shares")
    sp.add_argument("--workers", type=int, help="worker processes for sweep cells")
    sp.add_argument("--output", help="grid JSON path")
    sp.add_argument("--csv", help="plot-ready CSV path")
    sp.set_defaults(func=cmd_fidelity)

    sp = sub.add_parser("flag", help="flag trivial and potentially erroneous instances")
    add_common(sp)
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--k-low", dest="k_low", type=int, help="trivial count")
    sp.add_argument("--k-high", dest="k_high", type=int, help="erroneous-candidate count")
    sp.add_argument("--output", help="flag set path")
    sp.set_defaults(func=cmd_flag)

    rp = sub.add_parser("report", help="analysis reports")
    rsub = rp.add_subparsers(dest="report_kind", required=True)

    sp = rsub.add_parser("regions", help="per-difficulty-region accuracy")
    add_common(sp)
    sp.add_argument("--candidate-log", dest="candidate_log",
                    help="prediction log with 'correct' fields")
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--bins", type=int, help="number of difficulty regions")
    sp.add_argument("--output", help="report path")
    sp.set_defaults(func=cmd_report_regions)

    sp = rsub.add_parser("labels", help="per-label difficulty summary")
    add_common(sp)
    sp.add_argument("--instances", help="instances ndjson")
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--output", help="report path")
    sp.set_defaults(func=cmd_report_labels)

    sp = rsub.add_parser("ood", help="weighted vs plain accuracy as OOD predictors")
    add_common(sp)
    sp.add_argument("--candidate-log", dest="candidate_log",
                    help="prediction log with 'correct' fields")
    sp.add_argument("--difficulty", help="difficulty CSV")
    sp.add_argument("--ood-accuracies", dest="ood_accuracies",
                    help="CSV candidate_id,accuracy")
    sp.add_argument("--mu-grid", dest="mu_grid", help="comma list of mu values")
    sp.add_argument("--output", help="report path")
    sp.set_defaults(func=cmd_report_ood)

    sp = rsub.add_parser("repair", help="before/after repair accuracy per flag class")
    add_common(sp)
    sp.add_argument("--before-log", dest="before_log",
                    help="pre-repair prediction log with 'correct' fields")
    sp.add_argument("--after-log", dest="after_log",
                    help="post-repair prediction log with 'correct' fields")
    sp.add_argument("--flags", help="flag set path")
    sp.add_argument("--output", help="report path")
    sp.set_defaults(func=cmd_report_repair)

    sp = sub.add_parser("simulate", help="materialize a synthetic end-to-end pipeline")
    add_common(sp)
    sp.add_argument("--seed", type=int, help="world seed")
    sp.add_argument("--n-instances", dest="n_instances", type=int,
                    help="synthetic instance count")
    sp.add_argument("--n-candidates", dest="n_candidates", type=int,
                    help="candidate model count")
    sp.add_argument("--profile", choices=["standard_normal", "dataset_like"],
                    help="latent difficulty profile")
    sp.add_argument("--robustness-spread", dest="robustness_spread", type=float,
                    help="spread of per-candidate robustness slopes (0 = plain logistic)")
    sp.add_argument("--budget-pcts", dest="budget_pcts",
                    help="comma list of fidelity-sweep percentages")
    sp.add_argument("--replicates", type=int, help="seed replicates per sweep cell")
    sp.add_argument("--k-low", dest="k_low", type=int, help="trivial flag count")
    sp.add_argument("--k-high", dest="k_high", type=int,
                    help="erroneous-candidate flag count")
    sp.add_argument("--workers", type=int, help="worker processes for sweep cells")
    sp.add_argument("--output-dir", dest="output_dir", help="output tree directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("serve", help="run the repair workbench API")
    add_common(sp)
    sp.add_argument("--addr", help="host:port (env ILDAE_ADDR)")
    sp.add_argument("--predictor-url", dest="predictor_url",
                    help="external predictor endpoint (env ILDAE_PREDICTOR_URL)")
    sp.add_argument("--data-dir", dest="data_dir",
                    help="directory with instances.jsonl, difficulty.csv, flags.json "
                         "(env ILDAE_DATA_DIR)")
    sp.add_argument("--token", help="shared bearer token (env ILDAE_TOKEN)")
    sp.add_argument("--stub-seed", dest="stub_seed", type=int,
                    help="seed for the built-in stub predictor")
    sp.add_argument("--ui-dir", dest="ui_dir",
                    help="serve the workbench UI from this directory at /")
    sp.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DiffevalError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        for klass, code in _EXIT_CODES:
            if isinstance(e, klass):
                return code
        return 1
    except OSError as e:
        print(f"OSError: {e}", file=sys.stderr)
        return 10


if __name__ == "__main__":
    sys.exit(main())
