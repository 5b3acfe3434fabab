"""Event-sourced study engine.

Every mutation is validated against current state, recorded as an event,
and then applied by a pure reducer; replaying the log from empty state
reconstructs the engine bit for bit. One lock serializes command
validation and append -- the event log is the linearization point.
Model calls happen outside the lock (they can take seconds) with a
pending marker preventing duplicate in-flight drafts.
"""

from __future__ import annotations

import json
import random
import threading
from pathlib import Path
from typing import Optional, Sequence

from ..corpus import Arm, AuthorRole
from ..evaluation import (
    BlindedBatch,
    EvaluationCase,
    EvaluationItem,
    Instrument,
    SourcedReport,
    build_blinded_items,
    validate_response,
)
from ..labeler import Lexicon, label_report, load_lexicon
from ..taxonomy import AssertionLabel
from .clock import Clock, SystemClock
from .events import Event, EventLog, read_event_log
from .modelclient import LocalTemplateModel, ModelClient, ModelDraft

__all__ = [
    "OrchestratorError",
    "NotFoundError",
    "ValidationFailed",
    "InvalidTransition",
    "ConflictError",
    "ForbiddenError",
    "ConcealmentError",
    "StudyEngine",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_VERSION = 1


class OrchestratorError(Exception):
    """Base for engine command failures."""


class NotFoundError(OrchestratorError):
    pass


class ValidationFailed(OrchestratorError):
    pass


class InvalidTransition(OrchestratorError):
    pass


class ConflictError(OrchestratorError):
    pass


class ForbiddenError(OrchestratorError):
    pass


class ConcealmentError(OrchestratorError):
    pass


def _new_study_state(study_id: str) -> dict:
    return {
        "study_id": study_id,
        "allocations": [],
        "readers": {},          # reader_id -> {arm, allocation_index}
        "cases": {},            # case_id -> case dict
        "sessions": {},         # session_id -> session dict
        "reports": {},          # report_id -> report dict
        "batches": {},          # batch_id -> {instrument, seed, items, key}
        "eval_records": [],     # list of record dicts
        "eval_seen": {},        # "item_id\x1frater_id" -> True, duplicate guard
        "next_report_seq": 1,
    }


class StudyEngine:
    def __init__(self, clock: Clock | None = None,
                 model_client: ModelClient | None = None,
                 event_log: EventLog | None = None,
                 lexicon: Lexicon | None = None):
        self.clock = clock if clock is not None else SystemClock()
        self.model_client = model_client if model_client is not None else LocalTemplateModel()
        self.log = event_log if event_log is not None else EventLog()
        self.lexicon = lexicon if lexicon is not None else load_lexicon()
        # reentrant: commands return via the public query methods
        self._lock = threading.RLock()
        self._state: dict = {"studies": {}}
        self._drafts_pending: set[tuple[str, str]] = set()
        # a log opened on an existing file arrives with history; fold it
        # so a restarted service resumes instead of starting blank
        for event in self.log.events():
            _apply_event(self._state, event)

    # ------------------------------------------------------------------
    # Event plumbing

    def _emit(self, event_type: str, payload: dict) -> Event:
        """Append and apply one event; caller must hold the lock."""
        event = Event(self.log.next_seq, event_type,
                      self.clock.now(), self.clock.monotonic(), payload)
        self.log.append(event)
        _apply_event(self._state, event)
        return event

    @staticmethod
    def replay(events: Sequence[Event], clock: Clock | None = None,
               model_client: ModelClient | None = None,
               lexicon: Lexicon | None = None) -> "StudyEngine":
        """Rebuild an engine by folding an event sequence from empty state."""
        engine = StudyEngine(clock=clock, model_client=model_client,
                             event_log=EventLog(), lexicon=lexicon)
        for event in events:
            engine.log.append(event)
            _apply_event(engine._state, event)
        return engine

    @staticmethod
    def from_event_log(path: str | Path, clock: Clock | None = None,
                       model_client: ModelClient | None = None) -> "StudyEngine":
        return StudyEngine.replay(read_event_log(path), clock, model_client)

    def state_digest(self) -> str:
        """Canonical JSON of the full state, for replay-identity checks."""
        with self._lock:
            return json.dumps(self._state, sort_keys=True, ensure_ascii=False)

    def write_snapshot(self, path: str | Path) -> None:
        with self._lock:
            snapshot = {
                "snapshot_version": SNAPSHOT_VERSION,
                "last_seq": len(self.log.events()),
                "state": self._state,
            }
        Path(path).write_text(json.dumps(snapshot, sort_keys=True, ensure_ascii=False),
                              encoding="utf-8")

    @staticmethod
    def from_snapshot(snapshot_path: str | Path, events: Sequence[Event] = (),
                      clock: Clock | None = None,
                      model_client: ModelClient | None = None) -> "StudyEngine":
        """Restore from a snapshot, then apply events newer than it."""
        snapshot = json.loads(Path(snapshot_path).read_text(encoding="utf-8"))
        if snapshot.get("snapshot_version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {snapshot.get('snapshot_version')!r}")
        engine = StudyEngine(clock=clock, model_client=model_client, event_log=EventLog())
        engine._state = snapshot["state"]
        last_seq = int(snapshot["last_seq"])
        for event in events:
            engine.log.append(event)
            if event.seq > last_seq:
                _apply_event(engine._state, event)
        return engine

    def _study(self, study_id: str) -> dict:
        study = self._state["studies"].get(study_id)
        if study is None:
            raise NotFoundError(f"unknown study {study_id!r}")
        return study

    # ------------------------------------------------------------------
    # Commands

    def create_study(self, study_id: str) -> dict:
        if not study_id:
            raise ValidationFailed("study_id must be non-empty")
        with self._lock:
            if study_id in self._state["studies"]:
                raise ConflictError(f"study {study_id!r} already exists")
            self._emit("study_created", {"study_id": study_id})
            return {"study_id": study_id}

    def generate_allocation(self, study_id: str, seed: int, n: int,
                            block_size: int = 4) -> int:
        """Permuted-block 1:1 randomization; every allocation starts sealed."""
        if block_size < 2 or block_size % 2 != 0:
            raise ValidationFailed(f"block_size must be even and >= 2, got {block_size}")
        if n < 1:
            raise ValidationFailed(f"n must be >= 1, got {n}")
        rng = random.Random(seed)
        arms: list[str] = []
        half = block_size // 2
        while len(arms) < n:
            block = [Arm.AI_ASSISTED.value] * half + [Arm.STANDARD_CARE.value] * half
            rng.shuffle(block)
            arms.extend(block)
        arms = arms[:n]
        with self._lock:
            study = self._study(study_id)
            if study["allocations"]:
                raise ConflictError("allocation sequence already generated")
            self._emit("allocation_generated",
                       {"study_id": study_id, "seed": seed, "n": n,
                        "block_size": block_size, "arms": arms})
            return n

    def assign_reader(self, study_id: str, reader_id: str) -> str:
        """Open the next sealed allocation for a reader and reveal its arm."""
        if not reader_id:
            raise ValidationFailed("reader_id must be non-empty")
        with self._lock:
            study = self._study(study_id)
            if reader_id in study["readers"]:
                raise ConflictError(f"reader {reader_id!r} already assigned")
            index = next((i for i, a in enumerate(study["allocations"]) if a["sealed"]), None)
            if index is None:
                raise ConflictError("allocation sequence exhausted")
            self._emit("reader_assigned",
                       {"study_id": study_id, "reader_id": reader_id,
                        "allocation_index": index,
                        "opened_at": self.clock.now()})
            return study["allocations"][index]["arm"]

    def register_case(self, study_id: str, case_id: str, image_refs: Sequence[str],
                      history_note: str = "", patient_meta: dict | None = None,
                      admissible: bool = True) -> dict:
        if not case_id:
            raise ValidationFailed("case_id must be non-empty")
        if not image_refs:
            raise ValidationFailed("image_refs must be non-empty")
        with self._lock:
            study = self._study(study_id)
            if case_id in study["cases"]:
                raise ConflictError(f"case {case_id!r} already registered")
            self._emit("case_registered",
                       {"study_id": study_id, "case_id": case_id,
                        "image_refs": list(image_refs),
                        "history_note": history_note,
                        "patient_meta": dict(patient_meta or {}),
                        "admissible": bool(admissible)})
            return self.case_view(study_id, case_id)

    def start_session(self, study_id: str, case_id: str, reader_id: str) -> dict:
        with self._lock:
            study = self._study(study_id)
            case = study["cases"].get(case_id)
            if case is None:
                raise NotFoundError(f"unknown case {case_id!r}")
            reader = study["readers"].get(reader_id)
            if reader is None:
                raise NotFoundError(f"reader {reader_id!r} is not assigned to an arm")
            arm = reader["arm"]
            if arm in case["sessions_by_arm"]:
                raise ConflictError(f"case {case_id!r} already has a {arm} session")
            session_id = f"sess-{case_id}-{arm}"
            self._emit("session_started",
                       {"study_id": study_id, "session_id": session_id,
                        "case_id": case_id, "reader_id": reader_id, "arm": arm,
                        "started_wall": self.clock.now(),
                        "started_mono": self.clock.monotonic()})
            return self.session_view(study_id, session_id)

    def request_ai_draft(self, study_id: str, session_id: str) -> ModelDraft:
        """Fetch a model draft for an ai-assisted session in Reading state.

        The network call runs outside the engine lock; state is re-checked
        before the draft event is appended.
        """
        with self._lock:
            study = self._study(study_id)
            session = study["sessions"].get(session_id)
            if session is None:
                raise NotFoundError(f"unknown session {session_id!r}")
            if session["arm"] != Arm.AI_ASSISTED.value:
                raise ForbiddenError("AI drafts are forbidden in the standard-care arm")
            if session["state"] != "reading":
                raise InvalidTransition(f"session is {session['state']}, not reading")
            if session["draft_source"] != "none":
                raise ConflictError("draft already recorded for this session")
            pending_key = (study_id, session_id)
            if pending_key in self._drafts_pending:
                raise ConflictError("draft request already in flight")
            self._drafts_pending.add(pending_key)
            case = study["cases"][session["case_id"]]
            image_refs = list(case["image_refs"])
            history_note = case["history_note"]
            case_id = session["case_id"]

        try:
            draft = self.model_client.generate(case_id, image_refs, history_note)
        finally:
            with self._lock:
                self._drafts_pending.discard(pending_key)

        with self._lock:
            study = self._study(study_id)
            session = study["sessions"][session_id]
            if session["state"] != "reading":
                raise InvalidTransition(f"session is {session['state']}, not reading")
            if session["draft_source"] != "none":
                raise ConflictError("draft already recorded for this session")
            report_id = f"rep-{study['next_report_seq']:05d}"
            self._emit("draft_recorded",
                       {"study_id": study_id, "session_id": session_id,
                        "report_id": report_id,
                        "report_text": draft.report_text,
                        "probabilities": list(draft.finding_probabilities.probabilities),
                        "latency_ms": draft.latency_ms,
                        "model_version": draft.model_version})
            return draft

    def finalize_session(self, study_id: str, session_id: str, final_text: str) -> dict:
        if not final_text or not final_text.strip():
            raise ValidationFailed("final_text must be non-empty")
        with self._lock:
            study = self._study(study_id)
            session = study["sessions"].get(session_id)
            if session is None:
                raise NotFoundError(f"unknown session {session_id!r}")
            if session["state"] != "reading":
                raise InvalidTransition(f"session is {session['state']}, not reading")
            finalized_mono = self.clock.monotonic()
            reading_time_s = finalized_mono - session["started_mono"]
            if reading_time_s <= 0:
                raise ValidationFailed("monotonic clock did not advance; refusing zero reading time")
            report_id = f"rep-{study['next_report_seq']:05d}"
            self._emit("session_finalized",
                       {"study_id": study_id, "session_id": session_id,
                        "report_id": report_id, "final_text": final_text,
                        "finalized_wall": self.clock.now(),
                        "finalized_mono": finalized_mono,
                        "reading_time_s": reading_time_s})
            return self.session_view(study_id, session_id)

    def senior_review(self, study_id: str, case_id: str, reviewer_id: str,
                      base_arm: str | None = None, base_report_id: str | None = None,
                      text: str | None = None) -> dict:
        """Release a case: senior signs off on one junior report, optionally edited."""
        if not reviewer_id:
            raise ValidationFailed("reviewer_id must be non-empty")
        with self._lock:
            study = self._study(study_id)
            case = study["cases"].get(case_id)
            if case is None:
                raise NotFoundError(f"unknown case {case_id!r}")
            if case["released_report_id"] is not None:
                raise ConflictError(f"case {case_id!r} already released")
            sessions = [study["sessions"][sid] for sid in case["sessions_by_arm"].values()]
            finalized = [s for s in sessions if s["state"] == "finalized"]
            if len(finalized) < 2:
                raise InvalidTransition(
                    f"both junior sessions must be finalized (have {len(finalized)})"
                )
            if base_report_id is None:
                if base_arm is None:
                    raise ValidationFailed("give base_arm or base_report_id")
                session = next((s for s in finalized if s["arm"] == base_arm), None)
                if session is None:
                    raise ValidationFailed(f"no finalized session in arm {base_arm!r}")
                base_report_id = session["report_versions"][-1]
            base = study["reports"].get(base_report_id)
            if base is None or base["case_id"] != case_id:
                raise ValidationFailed(f"base report {base_report_id!r} not part of case")
            released_text = base["text"] if text is None else text
            if not released_text.strip():
                raise ValidationFailed("released text must be non-empty")
            report_id = f"rep-{study['next_report_seq']:05d}"
            self._emit("senior_reviewed",
                       {"study_id": study_id, "case_id": case_id,
                        "reviewer_id": reviewer_id,
                        "base_report_id": base_report_id,
                        "report_id": report_id, "text": released_text,
                        "signed_wall": self.clock.now()})
            return dict(study["reports"][report_id])

    def build_evaluation_batch(self, study_id: str, instrument: str | Instrument,
                               seed: int) -> dict:
        """Build a blinded item batch; the unblinding key stays engine-side."""
        inst = instrument if isinstance(instrument, Instrument) else Instrument(instrument)
        with self._lock:
            study = self._study(study_id)
            batch_id = f"batch-{inst.value}-{seed}"
            if batch_id in study["batches"]:
                raise ConflictError(f"batch {batch_id!r} already built")
            cases = self._evaluation_cases(study, inst)
            if not cases:
                raise ValidationFailed("no cases eligible for this instrument yet")
            batch = build_blinded_items(cases, inst, seed)
            self._emit("batch_built",
                       {"study_id": study_id, "batch_id": batch_id,
                        "instrument": inst.value, "seed": seed,
                        "items": batch.items_as_dicts(),
                        "key": batch.key})
            return {"batch_id": batch_id, "instrument": inst.value,
                    "items": batch.items_as_dicts()}

    def _evaluation_cases(self, study: dict, inst: Instrument) -> list[EvaluationCase]:
        cases: list[EvaluationCase] = []
        for case_id in sorted(study["cases"]):
            case = study["cases"][case_id]
            sessions = {arm: study["sessions"][sid]
                        for arm, sid in case["sessions_by_arm"].items()}
            if inst is Instrument.SOURCE_GUESS:
                ai_session = sessions.get(Arm.AI_ASSISTED.value)
                if (ai_session is None or not ai_session["draft_report_id"]
                        or case["released_report_id"] is None):
                    continue
                draft_text = study["reports"][ai_session["draft_report_id"]]["text"]
                released_text = study["reports"][case["released_report_id"]]["text"]
                cases.append(EvaluationCase(case_id, (
                    SourcedReport("ai", draft_text),
                    SourcedReport("published", released_text),
                )))
            else:
                finals = {}
                for arm, session in sessions.items():
                    if session["state"] == "finalized":
                        finals[arm] = study["reports"][session["report_versions"][-1]]["text"]
                if len(finals) != 2:
                    continue
                cases.append(EvaluationCase(case_id, tuple(
                    SourcedReport(arm, finals[arm]) for arm in sorted(finals)
                )))
        return cases

    def record_evaluation(self, study_id: str, batch_id: str, item_id: str,
                          rater_id: str, response: str | int) -> dict:
        if not rater_id:
            raise ValidationFailed("rater_id must be non-empty")
        with self._lock:
            study = self._study(study_id)
            batch = study["batches"].get(batch_id)
            if batch is None:
                raise NotFoundError(f"unknown batch {batch_id!r}")
            if not any(item["item_id"] == item_id for item in batch["items"]):
                raise NotFoundError(f"item {item_id!r} not in batch {batch_id!r}")
            inst = Instrument(batch["instrument"])
            try:
                validate_response(inst, response)
            except ValueError as exc:
                raise ValidationFailed(str(exc)) from exc
            if f"{item_id}\x1f{rater_id}" in study["eval_seen"]:
                raise ConflictError(
                    f"rater {rater_id!r} already responded to item {item_id!r}"
                )
            self._emit("evaluation_recorded",
                       {"study_id": study_id, "batch_id": batch_id,
                        "item_id": item_id, "rater_id": rater_id,
                        "response": response, "at": self.clock.now()})
            return {"batch_id": batch_id, "item_id": item_id, "rater_id": rater_id}

    # ------------------------------------------------------------------
    # Queries (never expose sealed arms or unblinding keys)

    def allocation_view(self, study_id: str) -> list[dict]:
        with self._lock:
            study = self._study(study_id)
            out = []
            for alloc in study["allocations"]:
                row = {"sequence_index": alloc["sequence_index"],
                       "sealed": alloc["sealed"],
                       "opened_at": alloc["opened_at"]}
                if not alloc["sealed"]:
                    row["arm"] = alloc["arm"]
                out.append(row)
            return out

    def allocation_arm(self, study_id: str, index: int) -> str:
        with self._lock:
            study = self._study(study_id)
            if not 0 <= index < len(study["allocations"]):
                raise NotFoundError(f"no allocation {index}")
            alloc = study["allocations"][index]
            if alloc["sealed"]:
                raise ConcealmentError(f"allocation {index} is sealed")
            return alloc["arm"]

    def allocation_counts(self, study_id: str) -> dict[str, int]:
        """Aggregate arm counts over the whole sequence (audit only).

        The aggregate is fixed by the balanced design, so it reveals
        nothing about any individual sealed allocation.
        """
        with self._lock:
            study = self._study(study_id)
            counts: dict[str, int] = {}
            for alloc in study["allocations"]:
                counts[alloc["arm"]] = counts.get(alloc["arm"], 0) + 1
            return counts

    def session_view(self, study_id: str, session_id: str) -> dict:
        with self._lock:
            study = self._study(study_id)
            session = study["sessions"].get(session_id)
            if session is None:
                raise NotFoundError(f"unknown session {session_id!r}")
            view = dict(session)
            view["report_versions"] = list(session["report_versions"])
            return view

    def case_view(self, study_id: str, case_id: str) -> dict:
        with self._lock:
            study = self._study(study_id)
            case = study["cases"].get(case_id)
            if case is None:
                raise NotFoundError(f"unknown case {case_id!r}")
            view = dict(case)
            view["image_refs"] = list(case["image_refs"])
            view["sessions_by_arm"] = dict(case["sessions_by_arm"])
            return view

    def report_view(self, study_id: str, report_id: str) -> dict:
        with self._lock:
            study = self._study(study_id)
            report = study["reports"].get(report_id)
            if report is None:
                raise NotFoundError(f"unknown report {report_id!r}")
            return dict(report)

    def batch_view(self, study_id: str, batch_id: str) -> dict:
        """Batch items for raters; the key never leaves the engine."""
        with self._lock:
            study = self._study(study_id)
            batch = study["batches"].get(batch_id)
            if batch is None:
                raise NotFoundError(f"unknown batch {batch_id!r}")
            return {"batch_id": batch_id, "instrument": batch["instrument"],
                    "seed": batch["seed"],
                    "items": [dict(item) for item in batch["items"]]}

    def overview(self, study_id: str) -> dict:
        with self._lock:
            study = self._study(study_id)
            allocations = study["allocations"]
            opened = [a for a in allocations if not a["sealed"]]
            opened_by_arm: dict[str, int] = {}
            for alloc in opened:
                opened_by_arm[alloc["arm"]] = opened_by_arm.get(alloc["arm"], 0) + 1
            readers_by_arm: dict[str, int] = {}
            for reader in study["readers"].values():
                readers_by_arm[reader["arm"]] = readers_by_arm.get(reader["arm"], 0) + 1
            sessions = study["sessions"].values()
            cases = study["cases"].values()
            return {
                "study_id": study_id,
                "allocations": {
                    "total": len(allocations),
                    "sealed": len(allocations) - len(opened),
                    "opened": len(opened),
                    "opened_by_arm": opened_by_arm,
                },
                "readers": {"total": len(study["readers"]), "by_arm": readers_by_arm},
                "cases": {
                    "registered": len(cases),
                    "fully_read": sum(
                        1 for c in cases
                        if len(c["sessions_by_arm"]) == 2 and all(
                            study["sessions"][sid]["state"] == "finalized"
                            for sid in c["sessions_by_arm"].values())
                    ),
                    "released": sum(1 for c in cases if c["released_report_id"]),
                },
                "sessions": {
                    "reading": sum(1 for s in sessions if s["state"] == "reading"),
                    "finalized": sum(1 for s in sessions if s["state"] == "finalized"),
                },
                "evaluation": {
                    "batches": len(study["batches"]),
                    "records": len(study["eval_records"]),
                },
            }

    def list_studies(self) -> list[str]:
        with self._lock:
            return sorted(self._state["studies"])

    # ------------------------------------------------------------------
    # Export

    def export_study(self, study_id: str) -> dict:
        """Analysis dataset: per-case reading times, evaluation responses
        joined back through the private key, and pneumonia positivity from
        the rule labeler. Requires at least one released case.
        """
        with self._lock:
            study = self._study(study_id)
            released = [c for c in study["cases"].values() if c["released_report_id"]]
            if not released:
                raise ValidationFailed("study has no released cases to export")

            scores_by_case = self._evaluation_scores(study)
            rows = []
            for case_id in sorted(study["cases"]):
                case = study["cases"][case_id]
                if not case["released_report_id"]:
                    continue
                reading_time: dict[str, float] = {}
                pneumonia: dict[str, bool] = {}
                readers: dict[str, str] = {}
                for arm, sid in sorted(case["sessions_by_arm"].items()):
                    session = study["sessions"][sid]
                    if session["state"] != "finalized":
                        continue
                    reading_time[arm] = session["reading_time_s"]
                    readers[arm] = session["reader_id"]
                    final_text = study["reports"][session["report_versions"][-1]]["text"]
                    vector = label_report(final_text, self.lexicon)
                    pneumonia[arm] = vector["Pneumonia"] in (
                        AssertionLabel.POSITIVE, AssertionLabel.UNCERTAIN)
                row = {
                    "case_id": case_id,
                    "readers": readers,
                    "reading_time_s": reading_time,
                    "pneumonia_positive": pneumonia,
                    "released_report_id": case["released_report_id"],
                }
                row.update(scores_by_case.get(case_id, {
                    "quality_scores": {}, "agreement_scores": {},
                    "preference_votes": [],
                }))
                rows.append(row)

            counts: dict[str, int] = {}
            for alloc in study["allocations"]:
                counts[alloc["arm"]] = counts.get(alloc["arm"], 0) + 1
            return {
                "study_id": study_id,
                "n_cases": len(rows),
                "allocation_counts": counts,
                "lexicon_version": self.lexicon.version,
                "rows": rows,
            }

    def _evaluation_scores(self, study: dict) -> dict[str, dict]:
        """Join evaluation records back to cases via the private keys."""
        item_meta: dict[str, tuple[str, str, dict]] = {}
        for batch_id, batch in study["batches"].items():
            for item in batch["items"]:
                item_meta[item["item_id"]] = (
                    batch["instrument"], item["case_id"], batch["key"][item["item_id"]]
                )

        per_case: dict[str, dict] = {}
        for rec in study["eval_records"]:
            meta = item_meta.get(rec["item_id"])
            if meta is None:
                continue
            instrument, case_id, key = meta
            bucket = per_case.setdefault(case_id, {
                "quality_scores": {}, "agreement_scores": {}, "preference_votes": [],
            })
            if instrument == Instrument.LIKERT_QUALITY.value:
                source = key["report"]
                bucket["quality_scores"].setdefault(source, []).append(
                    [rec["rater_id"], int(rec["response"])])
            elif instrument == Instrument.RADPEER_AGREEMENT.value:
                source = key["report"]
                bucket["agreement_scores"].setdefault(source, []).append(
                    [rec["rater_id"], int(rec["response"])])
            elif instrument == Instrument.PAIRWISE_PREFERENCE.value:
                chosen = key["first"] if rec["response"] == "first" else key["second"]
                bucket["preference_votes"].append([rec["rater_id"], chosen])

        for bucket in per_case.values():
            for field in ("quality_scores", "agreement_scores"):
                for source in bucket[field]:
                    bucket[field][source] = [
                        score for _, score in sorted(bucket[field][source])
                    ]
            bucket["preference_votes"] = [
                arm for _, arm in sorted(bucket["preference_votes"])
            ]
        return per_case


# ----------------------------------------------------------------------
# Pure reducers: the only code allowed to mutate state.

def _apply_event(state: dict, event: Event) -> None:
    try:
        reducer = _REDUCERS[event.event_type]
    except KeyError:
        raise ValueError(f"unknown event type {event.event_type!r}") from None
    reducer(state, event.payload, event)


def _reduce_study_created(state: dict, payload: dict, event: Event) -> None:
    state["studies"][payload["study_id"]] = _new_study_state(payload["study_id"])


def _reduce_allocation_generated(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    study["allocations"] = [
        {"sequence_index": i, "arm": arm, "sealed": True,
         "opened_at": None, "opened_by": None}
        for i, arm in enumerate(payload["arms"])
    ]


def _reduce_reader_assigned(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    alloc = study["allocations"][payload["allocation_index"]]
    alloc["sealed"] = False
    alloc["opened_at"] = payload["opened_at"]
    alloc["opened_by"] = payload["reader_id"]
    study["readers"][payload["reader_id"]] = {
        "arm": alloc["arm"], "allocation_index": payload["allocation_index"],
    }


def _reduce_case_registered(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    study["cases"][payload["case_id"]] = {
        "case_id": payload["case_id"],
        "image_refs": list(payload["image_refs"]),
        "history_note": payload["history_note"],
        "patient_meta": dict(payload["patient_meta"]),
        "admissible": payload["admissible"],
        "sessions_by_arm": {},
        "released_report_id": None,
        "signature": None,
    }


def _reduce_session_started(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    session = {
        "session_id": payload["session_id"],
        "case_id": payload["case_id"],
        "reader_id": payload["reader_id"],
        "arm": payload["arm"],
        "state": "reading",
        "started_wall": payload["started_wall"],
        "started_mono": payload["started_mono"],
        "finalized_wall": None,
        "finalized_mono": None,
        "reading_time_s": None,
        "draft_source": "none",
        "draft_report_id": None,
        "draft_latency_ms": None,
        "model_version": None,
        "report_versions": [],
    }
    study["sessions"][payload["session_id"]] = session
    study["cases"][payload["case_id"]]["sessions_by_arm"][payload["arm"]] = payload["session_id"]


def _reduce_draft_recorded(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    session = study["sessions"][payload["session_id"]]
    case = study["cases"][session["case_id"]]
    report_id = payload["report_id"]
    study["reports"][report_id] = {
        "report_id": report_id,
        "case_id": session["case_id"],
        "text": payload["report_text"],
        "author_role": AuthorRole.AI_MODEL.value,
        "arm": session["arm"],
        "parent_report_id": None,
        "image_refs": list(case["image_refs"]),
        "history_note": case["history_note"],
        "probabilities": list(payload["probabilities"]),
        "model_version": payload["model_version"],
    }
    study["next_report_seq"] += 1
    session["draft_source"] = "ai-model"
    session["draft_report_id"] = report_id
    session["draft_latency_ms"] = payload["latency_ms"]
    session["model_version"] = payload["model_version"]
    session["report_versions"].append(report_id)


def _reduce_session_finalized(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    session = study["sessions"][payload["session_id"]]
    case = study["cases"][session["case_id"]]
    report_id = payload["report_id"]
    parent = session["report_versions"][-1] if session["report_versions"] else None
    study["reports"][report_id] = {
        "report_id": report_id,
        "case_id": session["case_id"],
        "text": payload["final_text"],
        "author_role": AuthorRole.JUNIOR.value,
        "arm": session["arm"],
        "parent_report_id": parent,
        "image_refs": list(case["image_refs"]),
        "history_note": case["history_note"],
    }
    study["next_report_seq"] += 1
    session["state"] = "finalized"
    session["finalized_wall"] = payload["finalized_wall"]
    session["finalized_mono"] = payload["finalized_mono"]
    session["reading_time_s"] = payload["reading_time_s"]
    session["report_versions"].append(report_id)


def _reduce_senior_reviewed(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    case = study["cases"][payload["case_id"]]
    base = study["reports"][payload["base_report_id"]]
    report_id = payload["report_id"]
    study["reports"][report_id] = {
        "report_id": report_id,
        "case_id": payload["case_id"],
        "text": payload["text"],
        "author_role": AuthorRole.SENIOR_RELEASED.value,
        "arm": base["arm"],
        "parent_report_id": payload["base_report_id"],
        "image_refs": list(base["image_refs"]),
        "history_note": base["history_note"],
    }
    study["next_report_seq"] += 1
    case["released_report_id"] = report_id
    case["signature"] = {"reviewer_id": payload["reviewer_id"],
                         "signed_at": payload["signed_wall"]}


def _reduce_batch_built(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    study["batches"][payload["batch_id"]] = {
        "instrument": payload["instrument"],
        "seed": payload["seed"],
        "items": [dict(item) for item in payload["items"]],
        "key": {k: dict(v) for k, v in payload["key"].items()},
    }


def _reduce_evaluation_recorded(state: dict, payload: dict, event: Event) -> None:
    study = state["studies"][payload["study_id"]]
    study["eval_records"].append({
        "batch_id": payload["batch_id"],
        "item_id": payload["item_id"],
        "rater_id": payload["rater_id"],
        "response": payload["response"],
        "at": payload["at"],
    })
    study["eval_seen"][f"{payload['item_id']}\x1f{payload['rater_id']}"] = True


_REDUCERS = {
    "study_created": _reduce_study_created,
    "allocation_generated": _reduce_allocation_generated,
    "reader_assigned": _reduce_reader_assigned,
    "case_registered": _reduce_case_registered,
    "session_started": _reduce_session_started,
    "draft_recorded": _reduce_draft_recorded,
    "session_finalized": _reduce_session_finalized,
    "senior_reviewed": _reduce_senior_reviewed,
    "batch_built": _reduce_batch_built,
    "evaluation_recorded": _reduce_evaluation_recorded,
}
