"""HTTP API backing the repair workbench.

Serves flag queues, accepts edit submissions with a live predictor verdict,
applies accept/reject decisions through the curation rules, and reports
before/after repair accuracy. All mutations go through a single append-only
edit log; replaying that log reconstructs server state exactly, and an
If-Match revision check protects concurrent curators from clobbering each
other.

The predictor is pluggable: an external HTTP endpoint speaking the
predictor contract, or the built-in deterministic stub (default), so the
whole workbench is demo-able with zero external dependencies.

Configuration (flags of ``diffeval serve`` or env vars): ILDAE_ADDR,
ILDAE_PREDICTOR_URL, ILDAE_DATA_DIR, ILDAE_TOKEN.
"""

from __future__ import annotations

import hashlib
import json
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse

from . import io as dio
from .simulator import sigmoid
from .core import CorrectnessMatrix, DifficultyVector, InstanceRecord
from .curation import (
    ERROR_REPAIR,
    GOLD_LABEL_FIELD,
    TRIVIAL_HARDENING,
    EditRecord,
    FlagSet,
    PredictorVerdict,
    accept_rule,
    repair_report,
)
from .errors import CurationError


@dataclass(frozen=True)
class Prediction:
    label_probs: dict[str, float]
    predicted_label: str


class StubPredictor:
    """Deterministic in-process predictor, seeded and inspectable.

    Each (text, label) pair hashes to a stable latent score, squashed
    through the synthetic world's logistic link and renormalized over the
    candidate labels; the prediction is the argmax. Direct invocation is
    the oracle for any test that needs to know whether an edit crosses the
    decision threshold.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def label_score(self, task_name: str, text: str, label: str) -> float:
        digest = hashlib.blake2b(
            f"{self.seed}\x1f{task_name}\x1f{label}\x1f{text}".encode("utf-8"),
            digest_size=8,
        ).digest()
        u = int.from_bytes(digest, "big") / 2**64
        return 4.0 * (u - 0.5)

    def predict(
        self, task_name: str, text_fields: list[tuple[str, str]], candidate_labels: list[str]
    ) -> Prediction:
        text = "\x1e".join(f"{k}\x1d{v}" for k, v in text_fields)
        mass = {
            lab: float(sigmoid(self.label_score(task_name, text, lab)))
            for lab in candidate_labels
        }
        total = sum(mass.values())
        probs = {lab: m / total for lab, m in mass.items()}
        predicted = max(sorted(probs), key=lambda lab: probs[lab])
        return Prediction(label_probs=probs, predicted_label=predicted)


class PredictorProtocolError(Exception):
    """The external predictor broke the contract or did not answer."""


class HttpPredictor:
    """Client for an external predictor endpoint speaking the contract.

    Request: {task_name, text_fields, candidate_labels}; response:
    {label_probs, predicted_label} with probabilities summing to 1 within
    1e-6 and predicted_label the argmax among candidate labels.
    """

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def predict(
        self, task_name: str, text_fields: list[tuple[str, str]], candidate_labels: list[str]
    ) -> Prediction:
        body = json.dumps(
            {
                "task_name": task_name,
                "text_fields": [[k, v] for k, v in text_fields],
                "candidate_labels": list(candidate_labels),
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as e:
            raise PredictorProtocolError(f"predictor unreachable: {e}") from e
        return validate_prediction(payload, candidate_labels)


def validate_prediction(payload: dict, candidate_labels: list[str]) -> Prediction:
    try:
        probs = {str(k): float(v) for k, v in payload["label_probs"].items()}
        predicted = str(payload["predicted_label"])
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise PredictorProtocolError(f"malformed predictor response: {e}") from None
    if set(probs) != set(candidate_labels):
        raise PredictorProtocolError("predictor label set differs from candidate labels")
    if abs(sum(probs.values()) - 1.0) > 1e-6:
        raise PredictorProtocolError(
            f"probabilities sum to {sum(probs.values())}, expected 1 +- 1e-6"
        )
    if predicted not in candidate_labels:
        raise PredictorProtocolError(f"predicted label {predicted!r} not a candidate")
    if probs[predicted] < max(probs.values()) - 1e-12:
        raise PredictorProtocolError("predicted_label is not the argmax of label_probs")
    return Prediction(label_probs=probs, predicted_label=predicted)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class WorkbenchState:
    """All server state; every mutation flows through the edit log."""

    def __init__(
        self,
        instances: list[InstanceRecord],
        difficulty: DifficultyVector,
        flags: FlagSet,
        predictor,
        edit_log_path,
        task_name: str = "default",
        token: str | None = None,
        clock: Callable[[], str] = _utc_now,
    ):
        self.original = {r.instance_id: r for r in instances}
        self.current = dict(self.original)
        self.difficulty = {
            iid: float(s) for iid, s in zip(difficulty.instance_ids, difficulty.scores)
        }
        self.flags = flags
        self.predictor = predictor
        self.edit_log_path = Path(edit_log_path)
        self.task_name = task_name
        self.token = token
        self.clock = clock
        self.labels = sorted({r.gold_label for r in instances})
        self.revisions = {iid: 0 for iid in self.original}
        self.edits: dict[int, EditRecord] = {}
        self.next_edit_id = 1
        self.lock = threading.Lock()
        # bound concurrent predictor calls so a slow endpoint cannot pile up
        self.predictor_gate = threading.BoundedSemaphore(8)
        self._verdict_cache: dict[tuple, Prediction] = {}
        if self.edit_log_path.exists():
            self._replay()

    # -- log replay ---------------------------------------------------------

    def _replay(self) -> None:
        for event in dio.read_edit_log(self.edit_log_path):
            if event["event"] == "edit":
                edit = dio.edit_from_dict(event)
                self.edits[edit.edit_id] = edit
                self.next_edit_id = edit.edit_id + 1
            elif event["event"] == "decision":
                target = self.edits[int(event["target_edit_id"])]
                self._apply_decision(target, event["decision"])
                self.next_edit_id = int(event["edit_id"]) + 1

    # -- predictor ----------------------------------------------------------

    def call_predictor(
        self, task_name: str, fields: list[tuple[str, str]], labels: list[str]
    ) -> Prediction:
        with self.predictor_gate:
            return self.predictor.predict(task_name, fields, labels)

    def predict_instance(self, record: InstanceRecord) -> Prediction:
        key = (self.task_name, record.text_fields, tuple(self.labels))
        if key not in self._verdict_cache:
            self._verdict_cache[key] = self.call_predictor(
                self.task_name, list(record.text_fields), self.labels
            )
        return self._verdict_cache[key]

    # -- edits --------------------------------------------------------------

    def submit_edit(
        self,
        instance_id: str,
        edit_kind: str,
        changed_fields: dict[str, str],
        author: str,
        rationale: str = "",
        expected_revision: int | None = None,
    ) -> EditRecord:
        with self.lock:
            record = self.current.get(instance_id)
            if record is None:
                raise HTTPException(404, f"unknown instance {instance_id!r}")
            if expected_revision is not None and expected_revision != self.revisions[instance_id]:
                raise HTTPException(
                    412,
                    f"instance revision is {self.revisions[instance_id]}, "
                    f"you edited revision {expected_revision}; reload and retry",
                )
            if edit_kind not in (TRIVIAL_HARDENING, ERROR_REPAIR):
                raise HTTPException(422, f"unknown edit_kind {edit_kind!r}")
            known = set(record.field_names) | {GOLD_LABEL_FIELD}
            unknown = set(changed_fields) - known
            if unknown:
                raise HTTPException(422, f"unknown fields {sorted(unknown)}")
            real_changes = {}
            for name, value in changed_fields.items():
                old = record.gold_label if name == GOLD_LABEL_FIELD else record.field_text(name)
                if value != old:
                    real_changes[name] = value
            if not real_changes:
                raise HTTPException(422, "empty edit: no field value actually changes")
            if edit_kind == TRIVIAL_HARDENING and GOLD_LABEL_FIELD in real_changes:
                raise HTTPException(
                    422,
                    "trivial_hardening edits must be label-preserving; "
                    "the gold label cannot change",
                )
            new_label = real_changes.get(GOLD_LABEL_FIELD, record.gold_label)
            if new_label not in self.labels:
                raise HTTPException(
                    422, f"gold label {new_label!r} outside label space {self.labels}"
                )
            edited = self._apply_fields(record, real_changes)
            try:
                pred = self.predict_instance(edited)
            except PredictorProtocolError as e:
                raise HTTPException(502, f"predictor failed: {e}; retry later") from None
            # confidence stored at log precision so replay is bit-exact
            verdict = PredictorVerdict(
                predicted_label=pred.predicted_label,
                confidence=round(pred.label_probs[pred.predicted_label], 6),
                flipped=pred.predicted_label != edited.gold_label,
            )
            edit = EditRecord(
                edit_id=self.next_edit_id,
                instance_id=instance_id,
                edit_kind=edit_kind,
                changed_fields=real_changes,
                author=author,
                timestamp=self.clock(),
                predictor_verdict=verdict,
                status="proposed",
                rationale=rationale,
            )
            self.next_edit_id += 1
            self.edits[edit.edit_id] = edit
            dio.append_edit_event(self.edit_log_path, dio.edit_to_dict(edit))
            return edit

    @staticmethod
    def _apply_fields(record: InstanceRecord, changes: dict[str, str]) -> InstanceRecord:
        fields = tuple(
            (k, changes.get(k, v)) for k, v in record.text_fields
        )
        return InstanceRecord(
            instance_id=record.instance_id,
            text_fields=fields,
            gold_label=changes.get(GOLD_LABEL_FIELD, record.gold_label),
            split_tag=record.split_tag,
        )

    def decide(self, edit_id: int, decision: str) -> EditRecord:
        if decision not in ("accepted", "rejected"):
            raise HTTPException(422, f"decision must be accepted or rejected, got {decision!r}")
        with self.lock:
            edit = self.edits.get(edit_id)
            if edit is None:
                raise HTTPException(404, f"unknown edit {edit_id}")
            if edit.status == decision:
                return edit  # idempotent re-post
            if edit.status != "proposed":
                raise HTTPException(
                    409, f"edit {edit_id} already {edit.status}; decisions are final"
                )
            if decision == "accepted":
                try:
                    if not accept_rule(edit):
                        raise HTTPException(
                            422,
                            "acceptance rule failed: trivial_hardening must flip "
                            "the predictor and preserve the gold label; "
                            "error_repair must change something",
                        )
                except CurationError as e:
                    raise HTTPException(422, str(e)) from None
            event_id = self.next_edit_id
            self.next_edit_id += 1
            updated = self._apply_decision(edit, decision)
            dio.append_edit_event(
                self.edit_log_path,
                {
                    "format_version": dio.FORMAT_VERSION,
                    "event": "decision",
                    "edit_id": event_id,
                    "target_edit_id": edit.edit_id,
                    "decision": decision,
                    "timestamp": self.clock(),
                },
            )
            return updated

    def _apply_decision(self, edit: EditRecord, decision: str) -> EditRecord:
        updated = replace(edit, status=decision)
        self.edits[edit.edit_id] = updated
        if decision == "accepted":
            record = self.current[edit.instance_id]
            self.current[edit.instance_id] = self._apply_fields(
                record, dict(edit.changed_fields)
            )
            self.revisions[edit.instance_id] += 1
        return updated

    # -- views --------------------------------------------------------------

    def instance_view(self, iid: str) -> dict:
        record = self.current.get(iid)
        if record is None:
            raise HTTPException(404, f"unknown instance {iid!r}")
        original = self.original[iid]
        return {
            "instance_id": iid,
            "revision": self.revisions[iid],
            "difficulty": self.difficulty.get(iid),
            "flag_kind": self.flags.kind_of(iid),
            "gold_label": record.gold_label,
            "text_fields": [[k, v] for k, v in record.text_fields],
            "original": {
                "gold_label": original.gold_label,
                "text_fields": [[k, v] for k, v in original.text_fields],
            },
            "edits": [
                dio.edit_to_dict(e)
                for e in sorted(self.edits.values(), key=lambda e: e.edit_id)
                if e.instance_id == iid
            ],
        }

    def flag_queue(self, kind: str, offset: int, limit: int) -> dict:
        if kind == "trivial":
            ids = self.flags.trivial_ids
        elif kind == "erroneous":
            ids = self.flags.erroneous_candidate_ids
        else:
            raise HTTPException(422, f"kind must be trivial or erroneous, got {kind!r}")
        page = ids[offset : offset + limit]
        items = []
        for iid in page:
            record = self.current[iid]
            own_edits = [e for e in self.edits.values() if e.instance_id == iid]
            items.append(
                {
                    "instance_id": iid,
                    "difficulty": self.flags.scores[iid],
                    "gold_label": record.gold_label,
                    "text_fields": [[k, v] for k, v in record.text_fields],
                    "revision": self.revisions[iid],
                    "attempt_count": len(own_edits),
                    "resolved": any(e.status == "accepted" for e in own_edits),
                }
            )
        return {"kind": kind, "total": len(ids), "offset": offset, "items": items}

    def repair_summary(self) -> dict:
        flagged = sorted(
            set(self.flags.trivial_ids) | set(self.flags.erroneous_candidate_ids)
        )
        if not flagged:
            return {"trivial": None, "erroneous": None}
        before_bits, after_bits = [], []
        for iid in flagged:
            before_bits.append(
                self.predict_instance(self.original[iid]).predicted_label
                == self.original[iid].gold_label
            )
            after_bits.append(
                self.predict_instance(self.current[iid]).predicted_label
                == self.current[iid].gold_label
            )
        before = CorrectnessMatrix(("predictor",), tuple(flagged), [before_bits])
        after = CorrectnessMatrix(("predictor",), tuple(flagged), [after_bits])
        report = repair_report(before, after, self.flags)
        out = {}
        for name, delta in (("trivial", report.trivial), ("erroneous", report.erroneous)):
            out[name] = (
                None
                if delta is None
                else {
                    "n_instances": delta.n_instances,
                    "n_candidates": delta.n_candidates,
                    "before_accuracy": delta.before_accuracy,
                    "after_accuracy": delta.after_accuracy,
                    "delta": delta.delta,
                }
            )
        return out


def create_app(state: WorkbenchState, static_dir=None) -> FastAPI:
    app = FastAPI(title="diffeval repair workbench", docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def check_token(request: Request, call_next):
        if state.token and request.url.path.startswith("/api"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {state.token}":
                return JSONResponse({"detail": "missing or invalid bearer token"}, 401)
        return await call_next(request)

    @app.get("/api/health")
    def health():
        return {"status": "ok", "instances": len(state.current)}

    @app.get("/api/flags")
    def flags(
        kind: str = Query(...),
        offset: int = Query(0, ge=0),
        limit: int = Query(50, ge=1, le=200),
    ):
        return state.flag_queue(kind, offset, limit)

    @app.get("/api/instances/{iid}")
    def instance(iid: str):
        return state.instance_view(iid)

    @app.post("/api/instances/{iid}/edits")
    async def submit_edit(iid: str, request: Request, if_match: str | None = Header(None)):
        body = await request.json()
        expected = None
        if if_match is not None:
            try:
                expected = int(if_match.strip('"'))
            except ValueError:
                raise HTTPException(422, f"If-Match must be a revision number, got {if_match!r}")
        changed = body.get("changed_fields")
        if not isinstance(changed, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in changed.items()
        ):
            raise HTTPException(422, "changed_fields must map field names to strings")
        edit = state.submit_edit(
            instance_id=iid,
            edit_kind=body.get("edit_kind", ""),
            changed_fields=changed,
            author=str(body.get("author", "anonymous")),
            rationale=str(body.get("rationale", "")),
            expected_revision=expected,
        )
        return dio.edit_to_dict(edit)

    @app.post("/api/edits/{edit_id}/decision")
    async def decide(edit_id: int, request: Request):
        body = await request.json()
        edit = state.decide(edit_id, str(body.get("decision", "")))
        return dio.edit_to_dict(edit)

    @app.get("/api/reports/repair")
    def repair():
        return state.repair_summary()

    @app.post("/api/predict")
    async def predict(request: Request):
        body = await request.json()
        fields = body.get("text_fields")
        labels = body.get("candidate_labels")
        if not isinstance(fields, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in fields
        ):
            raise HTTPException(422, "text_fields must be a list of [name, value] pairs")
        if not isinstance(labels, list) or not labels:
            raise HTTPException(422, "candidate_labels must be a non-empty list")
        try:
            pred = state.call_predictor(
                str(body.get("task_name", state.task_name)),
                [(str(k), str(v)) for k, v in fields],
                [str(lab) for lab in labels],
            )
        except PredictorProtocolError as e:
            raise HTTPException(502, f"predictor failed: {e}; retry later") from None
        return {"label_probs": pred.label_probs, "predicted_label": pred.predicted_label}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
