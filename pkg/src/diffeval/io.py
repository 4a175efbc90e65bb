"""File formats: prediction logs, score exports, manifests, plans, reports.

Two formats for two audiences: newline-delimited JSON records for logs
(streamable, appendable) and CSV for score exports (spreadsheet-friendly).
Structured documents are canonical JSON (sorted keys, compact separators,
floats rounded to 6 decimals), so serializing the same object twice yields
identical bytes. Every reader failure is a typed error carrying the file
location; readers never crash on adversarial input.

All schemas carry ``format_version`` (currently 1).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import ConfidenceMatrix, CorrectnessMatrix, DifficultyVector, InstanceRecord
from .curation import EditRecord, FlagSet, PredictorVerdict
from .difficulty import EnsembleManifest, build_manifest
from .errors import (
    DuplicateError,
    IntegrityError,
    MissingPredictionsError,
    ParseError,
)
from .selection import SelectionPlan, SelectionPolicy

FORMAT_VERSION = 1
DIFFICULTY_CSV_HEADER = "instance_id,difficulty,n_models"
FLOAT_DECIMALS = 6


def _round_floats(obj):
    if isinstance(obj, float):
        return round(obj, FLOAT_DECIMALS)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Stable byte representation: sorted keys, compact, 6-decimal floats."""
    return json.dumps(_round_floats(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False) + "\n"


def write_json_document(obj: dict, path) -> None:
    doc = {"format_version": FORMAT_VERSION, **obj}
    Path(path).write_text(canonical_json(doc), encoding="utf-8")


def read_json_document(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object at top level", path=path)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", path=path)
    return doc


def _field(record: dict, name: str, types, path, line):
    if name not in record:
        raise ParseError(f"missing field {name!r}", path=path, line=line)
    value = record[name]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        raise ParseError(
            f"field {name!r} has wrong type {type(value).__name__}", path=path, line=line
        )
    return value


# ---------------------------------------------------------------------------
# prediction logs


@dataclass(frozen=True)
class PredictionLog:
    """Parsed prediction log: confidences plus correctness when logged."""

    confidences: ConfidenceMatrix
    correctness: CorrectnessMatrix | None


def write_prediction_log(
    conf: ConfidenceMatrix,
    path,
    configs: dict[str, tuple[str, float, int]],
    correctness: CorrectnessMatrix | None = None,
) -> None:
    """Emit one record per (run, instance), sorted for byte stability.

    ``configs`` maps run_id -> (kind, fraction, epoch). Masked entries are
    skipped. Confidences are written with 6-decimal precision.
    """
    if correctness is not None and (
        correctness.candidate_ids != conf.model_ids
        or correctness.instance_ids != conf.instance_ids
    ):
        raise ValueError("correctness matrix must mirror the confidence matrix axes")
    lines = []
    for m, run_id in sorted(enumerate(conf.model_ids), key=lambda t: t[1]):
        kind, fraction, epoch = configs[run_id]
        for j, iid in enumerate(conf.instance_ids):
            if conf.mask is not None and not conf.mask[m, j]:
                continue
            rec = {
                "format_version": FORMAT_VERSION,
                "run_id": run_id,
                "config": {"kind": kind, "fraction": fraction, "epoch": epoch},
                "instance_id": iid,
                "gold_confidence": round(float(conf.values[m, j]), FLOAT_DECIMALS),
            }
            if correctness is not None:
                rec["correct"] = bool(correctness.correct[m, j])
            lines.append(canonical_json(rec))
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_prediction_log(
    path, manifest: EnsembleManifest | None = None, strict: bool = False
) -> PredictionLog:
    """Parse a prediction log into matrices.

    Duplicate (run_id, instance_id) records are rejected; missing pairs are
    masked, or rejected outright in strict mode. When a manifest is given,
    every record's config must match one of its entries. Correctness is
    returned when every record carries ``correct`` (the grid must then be
    complete, because correctness matrices have no mask).
    """
    seen: dict[tuple[str, str], float] = {}
    correct_flags: dict[tuple[str, str], bool] = {}
    has_correct: bool | None = None
    manifest_keys = manifest.entry_keys() if manifest is not None else None
    n_lines = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            n_lines += 1
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", path=path, line=lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("record is not an object", path=path, line=lineno)
            if rec.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
                raise ParseError(
                    f"unsupported format_version {rec.get('format_version')!r}",
                    path=path,
                    line=lineno,
                )
            run_id = _field(rec, "run_id", str, path, lineno)
            iid = _field(rec, "instance_id", str, path, lineno)
            confidence = _field(rec, "gold_confidence", (int, float), path, lineno)
            if not 0.0 <= float(confidence) <= 1.0:
                raise ParseError(
                    f"gold_confidence {confidence} outside [0, 1]", path=path, line=lineno
                )
            config = _field(rec, "config", dict, path, lineno)
            kind = _field(config, "kind", str, path, lineno)
            fraction = _field(config, "fraction", (int, float), path, lineno)
            epoch = _field(config, "epoch", int, path, lineno)
            if manifest_keys is not None and (kind, float(fraction), epoch) not in manifest_keys:
                raise ParseError(
                    f"config ({kind}, {fraction}, {epoch}) matches no manifest entry",
                    path=path,
                    line=lineno,
                )
            key = (run_id, iid)
            if key in seen:
                raise DuplicateError(
                    f"duplicate record for run {run_id!r} instance {iid!r}",
                    path=path,
                    line=lineno,
                )
            seen[key] = float(confidence)
            if "correct" in rec:
                correct_flags[key] = _field(rec, "correct", bool, path, lineno)
                if has_correct is False:
                    raise ParseError(
                        "some records carry 'correct' and some do not",
                        path=path,
                        line=lineno,
                    )
                has_correct = True
            else:
                if has_correct is True:
                    raise ParseError(
                        "some records carry 'correct' and some do not",
                        path=path,
                        line=lineno,
                    )
                has_correct = False
    if n_lines == 0:
        raise ParseError("no records in prediction log", path=path)

    run_ids = tuple(sorted({k[0] for k in seen}))
    instance_ids = tuple(sorted({k[1] for k in seen}))
    values = np.zeros((len(run_ids), len(instance_ids)))
    mask = np.zeros_like(values, dtype=bool)
    row = {r: m for m, r in enumerate(run_ids)}
    col = {i: j for j, i in enumerate(instance_ids)}
    for (run_id, iid), confidence in seen.items():
        values[row[run_id], col[iid]] = confidence
        mask[row[run_id], col[iid]] = True
    if strict and not mask.all():
        missing = int(mask.size - mask.sum())
        raise MissingPredictionsError(
            f"{missing} (run, instance) pairs missing from {path} in strict mode"
        )
    if not mask.any(axis=0).all():
        gone = [instance_ids[j] for j in np.nonzero(~mask.any(axis=0))[0]]
        raise MissingPredictionsError(
            f"instances with no predictions at all in {path}: {gone[:5]}"
        )
    conf = ConfidenceMatrix(
        model_ids=run_ids,
        instance_ids=instance_ids,
        values=values,
        mask=mask,
    )
    correctness = None
    if has_correct:
        if not mask.all():
            raise MissingPredictionsError(
                f"correctness-carrying log {path} has gaps; a complete grid is required"
            )
        correct = np.zeros_like(values, dtype=bool)
        for (run_id, iid), flag in correct_flags.items():
            correct[row[run_id], col[iid]] = flag
        correctness = CorrectnessMatrix(
            candidate_ids=run_ids, instance_ids=instance_ids, correct=correct
        )
    return PredictionLog(confidences=conf, correctness=correctness)


# ---------------------------------------------------------------------------
# difficulty CSV


def write_difficulty_csv(d: DifficultyVector, path) -> None:
    """CSV export, 6-decimal fixed-point scores, lexicographic id order."""
    lines = [DIFFICULTY_CSV_HEADER]
    for iid, score, n in zip(d.instance_ids, d.scores, d.n_models):
        lines.append(f"{iid},{score:.6f},{int(n)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_difficulty_csv(path, strict: bool = True) -> DifficultyVector:
    """Parse a difficulty CSV.

    Strict mode requires rows in lexicographic id order (the written
    contract); lenient mode reorders.
    """
    ids: list[str] = []
    id_set: set[str] = set()
    scores: list[float] = []
    counts: list[int] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DIFFICULTY_CSV_HEADER:
            raise ParseError(
                f"header mismatch: expected {DIFFICULTY_CSV_HEADER!r}, got {header!r}",
                path=path,
                line=1,
            )
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 3:
                raise ParseError(f"expected 3 columns, got {len(parts)}", path=path, line=lineno)
            iid, score_s, n_s = parts
            try:
                score = float(score_s)
                n = int(n_s)
            except ValueError:
                raise ParseError(f"malformed numeric fields {score_s!r}, {n_s!r}",
                                 path=path, line=lineno) from None
            if not 0.0 <= score <= 1.0:
                raise ParseError(f"difficulty {score} outside [0, 1]", path=path, line=lineno)
            if n < 1:
                raise ParseError(f"n_models {n} must be >= 1", path=path, line=lineno)
            if iid in id_set:
                raise DuplicateError(f"duplicate instance id {iid!r}", path=path, line=lineno)
            if strict and ids and iid < ids[-1]:
                raise ParseError(
                    f"rows out of lexicographic order at {iid!r} (strict mode)",
                    path=path,
                    line=lineno,
                )
            ids.append(iid)
            id_set.add(iid)
            scores.append(score)
            counts.append(n)
    if not ids:
        raise ParseError("no rows in difficulty CSV", path=path)
    return DifficultyVector(instance_ids=tuple(ids), scores=scores, n_models=counts)


# ---------------------------------------------------------------------------
# instances


def write_instances(instances: Iterable[InstanceRecord], path) -> None:
    lines = []
    for rec in sorted(instances, key=lambda r: r.instance_id):
        lines.append(
            canonical_json(
                {
                    "format_version": FORMAT_VERSION,
                    "instance_id": rec.instance_id,
                    "text_fields": [[k, v] for k, v in rec.text_fields],
                    "gold_label": rec.gold_label,
                    "char_length": rec.char_length,
                    "split_tag": rec.split_tag,
                }
            )
        )
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_instances(path) -> tuple[InstanceRecord, ...]:
    out: list[InstanceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", path=path, line=lineno) from None
            iid = _field(rec, "instance_id", str, path, lineno)
            if iid in seen:
                raise DuplicateError(f"duplicate instance id {iid!r}", path=path, line=lineno)
            seen.add(iid)
            fields = _field(rec, "text_fields", list, path, lineno)
            try:
                out.append(
                    InstanceRecord(
                        instance_id=iid,
                        text_fields=tuple((str(k), str(v)) for k, v in fields),
                        gold_label=_field(rec, "gold_label", str, path, lineno),
                        char_length=rec.get("char_length", -1),
                        split_tag=rec.get("split_tag", ""),
                    )
                )
            except ValueError as e:
                raise ParseError(str(e), path=path, line=lineno) from None
    if not out:
        raise ParseError("no instances in file", path=path)
    return tuple(sorted(out, key=lambda r: r.instance_id))


# ---------------------------------------------------------------------------
# manifest


def write_manifest(manifest: EnsembleManifest, path) -> None:
    write_json_document(
        {
            "data_fractions": list(manifest.data_fractions),
            "corruption_fractions": list(manifest.corruption_fractions),
            "epochs": manifest.epochs,
            "entries": [
                {"kind": e.kind, "fraction": e.fraction, "epoch": e.epoch, "run_id": e.run_id}
                for e in manifest.entries
            ],
        },
        path,
    )


def read_manifest(path) -> EnsembleManifest:
    doc = read_json_document(path)
    for key in ("data_fractions", "corruption_fractions", "epochs", "entries"):
        if key not in doc:
            raise ParseError(f"manifest missing key {key!r}", path=path)
    manifest = build_manifest(doc["data_fractions"], doc["corruption_fractions"], doc["epochs"])
    stored = {(e["kind"], float(e["fraction"]), int(e["epoch"])) for e in doc["entries"]}
    if stored != manifest.entry_keys():
        raise ParseError("manifest entries do not match the declared schedule", path=path)
    return manifest


# ---------------------------------------------------------------------------
# selection plans


def write_selection_plan(plan: SelectionPlan, path) -> None:
    write_json_document(
        {
            "policy": {
                "kind": plan.policy.kind,
                "band_edges": list(plan.policy.band_edges),
                "band_shares": list(plan.policy.band_shares),
                "seed": plan.policy.seed,
            },
            "budget_requested": plan.budget_requested,
            "selected_ids": list(plan.selected_ids),
            "per_band_counts": None
            if plan.per_band_counts is None
            else list(plan.per_band_counts),
            "degenerate_fallback": plan.degenerate_fallback,
        },
        path,
    )


def read_selection_plan(path) -> SelectionPlan:
    doc = read_json_document(path)
    try:
        pol = doc["policy"]
        policy = SelectionPolicy(
            kind=pol["kind"],
            band_edges=tuple(pol["band_edges"]),
            band_shares=tuple(pol["band_shares"]),
            seed=pol["seed"],
        )
        counts = doc["per_band_counts"]
        return SelectionPlan(
            selected_ids=tuple(doc["selected_ids"]),
            budget_requested=int(doc["budget_requested"]),
            policy=policy,
            per_band_counts=None if counts is None else tuple(int(c) for c in counts),
            degenerate_fallback=bool(doc["degenerate_fallback"]),
        )
    except KeyError as e:
        raise ParseError(f"selection plan missing key {e.args[0]!r}", path=path) from None


# ---------------------------------------------------------------------------
# flag sets


def write_flagset(flags: FlagSet, path) -> None:
    write_json_document(
        {
            "trivial_ids": list(flags.trivial_ids),
            "erroneous_candidate_ids": list(flags.erroneous_candidate_ids),
            "k_low": flags.k_low,
            "k_high": flags.k_high,
            "scores": {k: flags.scores[k] for k in sorted(flags.scores)},
        },
        path,
    )


def read_flagset(path) -> FlagSet:
    doc = read_json_document(path)
    try:
        return FlagSet(
            trivial_ids=tuple(doc["trivial_ids"]),
            erroneous_candidate_ids=tuple(doc["erroneous_candidate_ids"]),
            k_low=int(doc["k_low"]),
            k_high=int(doc["k_high"]),
            scores={str(k): float(v) for k, v in doc["scores"].items()},
        )
    except KeyError as e:
        raise ParseError(f"flag set missing key {e.args[0]!r}", path=path) from None


# ---------------------------------------------------------------------------
# edit log


def _verdict_to_dict(v: PredictorVerdict | None):
    if v is None:
        return None
    return {
        "predicted_label": v.predicted_label,
        "confidence": round(v.confidence, FLOAT_DECIMALS),
        "flipped": v.flipped,
    }


def _verdict_from_dict(d) -> PredictorVerdict | None:
    if d is None:
        return None
    return PredictorVerdict(
        predicted_label=d["predicted_label"],
        confidence=float(d["confidence"]),
        flipped=bool(d["flipped"]),
    )


def edit_to_dict(edit: EditRecord) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "event": "edit",
        "edit_id": edit.edit_id,
        "instance_id": edit.instance_id,
        "edit_kind": edit.edit_kind,
        "changed_fields": dict(edit.changed_fields),
        "author": edit.author,
        "timestamp": edit.timestamp,
        "predictor_verdict": _verdict_to_dict(edit.predictor_verdict),
        "status": edit.status,
        "rationale": edit.rationale,
    }


def edit_from_dict(d: dict) -> EditRecord:
    return EditRecord(
        edit_id=int(d["edit_id"]),
        instance_id=d["instance_id"],
        edit_kind=d["edit_kind"],
        changed_fields=dict(d["changed_fields"]),
        author=d["author"],
        timestamp=d["timestamp"],
        predictor_verdict=_verdict_from_dict(d.get("predictor_verdict")),
        status=d["status"],
        rationale=d.get("rationale", ""),
    )


def append_edit_event(path, event: dict) -> None:
    """Append one event ({"event": "edit"|"decision", "edit_id": n, ...})."""
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(canonical_json(event))
        fh.flush()
        os.fsync(fh.fileno())


def read_edit_log(path, recover: bool = False) -> list[dict]:
    """Read all events, enforcing strictly increasing edit_ids.

    A truncated or corrupt trailing line raises IntegrityError whose
    ``valid_count`` reports the recoverable prefix; with recover=True the
    clean prefix is returned instead.
    """
    events: list[dict] = []
    last_id = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError:
                if recover:
                    return events
                raise IntegrityError(
                    f"corrupt record at line {lineno} of {path}",
                    valid_count=len(events),
                ) from None
            if not isinstance(rec, dict) or "edit_id" not in rec or "event" not in rec:
                if recover:
                    return events
                raise IntegrityError(
                    f"malformed event at line {lineno} of {path}",
                    valid_count=len(events),
                )
            if int(rec["edit_id"]) <= last_id:
                raise IntegrityError(
                    f"non-monotone edit_id {rec['edit_id']} at line {lineno} of {path}",
                    valid_count=len(events),
                )
            last_id = int(rec["edit_id"])
            events.append(rec)
    return events
