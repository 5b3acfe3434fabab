"""HTTP API over the study engine.

Thin validation-and-transport layer: every mutation delegates to
StudyEngine, so the API inherits its linearization and concealment
guarantees. Handlers are safe under concurrent requests because the
engine serializes commands internally.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .engine import (
    ConcealmentError,
    ConflictError,
    ForbiddenError,
    InvalidTransition,
    NotFoundError,
    OrchestratorError,
    StudyEngine,
    ValidationFailed,
)

__all__ = ["create_app"]

_STATUS = {
    NotFoundError: 404,
    ValidationFailed: 400,
    InvalidTransition: 409,
    ConflictError: 409,
    ForbiddenError: 403,
    ConcealmentError: 403,
}


def _http_error(exc: OrchestratorError) -> HTTPException:
    status = _STATUS.get(type(exc), 400)
    return HTTPException(status_code=status, detail=str(exc))


class CreateStudyBody(BaseModel):
    study_id: str


class AllocationBody(BaseModel):
    seed: int
    n: int = Field(ge=1)
    block_size: int = 4


class ReaderBody(BaseModel):
    reader_id: str


class CaseBody(BaseModel):
    case_id: str
    image_refs: list[str]
    history_note: str = ""
    patient_meta: dict = Field(default_factory=dict)
    admissible: bool = True


class SessionBody(BaseModel):
    case_id: str
    reader_id: str


class FinalizeBody(BaseModel):
    final_text: str


class ReviewBody(BaseModel):
    reviewer_id: str
    base_arm: Optional[str] = None
    base_report_id: Optional[str] = None
    text: Optional[str] = None


class BatchBody(BaseModel):
    instrument: str
    seed: int


class RecordBody(BaseModel):
    batch_id: str
    item_id: str
    rater_id: str
    response: str | int


def create_app(engine: StudyEngine) -> FastAPI:
    app = FastAPI(title="cxrstudy orchestrator", version="1.0")

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except OrchestratorError as exc:
            raise _http_error(exc) from exc

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/studies")
    def list_studies() -> dict:
        return {"studies": engine.list_studies()}

    @app.post("/studies", status_code=201)
    def create_study(body: CreateStudyBody) -> dict:
        return run(engine.create_study, body.study_id)

    @app.post("/studies/{study_id}/allocation", status_code=201)
    def generate_allocation(study_id: str, body: AllocationBody) -> dict:
        n = run(engine.generate_allocation, study_id, body.seed, body.n, body.block_size)
        return {"study_id": study_id, "n": n}

    @app.get("/studies/{study_id}/allocations")
    def allocations(study_id: str) -> dict:
        return {"allocations": run(engine.allocation_view, study_id)}

    @app.get("/studies/{study_id}/allocations/{index}/arm")
    def allocation_arm(study_id: str, index: int) -> dict:
        return {"sequence_index": index, "arm": run(engine.allocation_arm, study_id, index)}

    @app.post("/studies/{study_id}/readers", status_code=201)
    def assign_reader(study_id: str, body: ReaderBody) -> dict:
        arm = run(engine.assign_reader, study_id, body.reader_id)
        return {"reader_id": body.reader_id, "arm": arm}

    @app.post("/studies/{study_id}/cases", status_code=201)
    def register_case(study_id: str, body: CaseBody) -> dict:
        return run(engine.register_case, study_id, body.case_id, body.image_refs,
                   body.history_note, body.patient_meta, body.admissible)

    @app.get("/studies/{study_id}/cases/{case_id}")
    def case_view(study_id: str, case_id: str) -> dict:
        return run(engine.case_view, study_id, case_id)

    @app.post("/studies/{study_id}/sessions", status_code=201)
    def start_session(study_id: str, body: SessionBody) -> dict:
        return run(engine.start_session, study_id, body.case_id, body.reader_id)

    @app.get("/studies/{study_id}/sessions/{session_id}")
    def session_view(study_id: str, session_id: str) -> dict:
        return run(engine.session_view, study_id, session_id)

    @app.post("/studies/{study_id}/sessions/{session_id}/draft")
    def request_draft(study_id: str, session_id: str) -> dict:
        draft = run(engine.request_ai_draft, study_id, session_id)
        return {
            "session_id": session_id,
            "report_text": draft.report_text,
            "findings": [
                {"finding": f, "probability": p}
                for f, p in draft.finding_probabilities.as_dict().items()
            ],
            "latency_ms": draft.latency_ms,
            "model_version": draft.model_version,
        }

    @app.post("/studies/{study_id}/sessions/{session_id}/finalize")
    def finalize(study_id: str, session_id: str, body: FinalizeBody) -> dict:
        return run(engine.finalize_session, study_id, session_id, body.final_text)

    @app.post("/studies/{study_id}/cases/{case_id}/review", status_code=201)
    def review(study_id: str, case_id: str, body: ReviewBody) -> dict:
        return run(engine.senior_review, study_id, case_id, body.reviewer_id,
                   body.base_arm, body.base_report_id, body.text)

    @app.get("/studies/{study_id}/reports/{report_id}")
    def report_view(study_id: str, report_id: str) -> dict:
        return run(engine.report_view, study_id, report_id)

    @app.post("/studies/{study_id}/evaluation/batches", status_code=201)
    def build_batch(study_id: str, body: BatchBody) -> dict:
        try:
            return run(engine.build_evaluation_batch, study_id, body.instrument, body.seed)
        except ValueError as exc:  # unknown instrument name
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/studies/{study_id}/evaluation/batches/{batch_id}")
    def batch_view(study_id: str, batch_id: str) -> dict:
        return run(engine.batch_view, study_id, batch_id)

    @app.post("/studies/{study_id}/evaluation/records", status_code=201)
    def record(study_id: str, body: RecordBody) -> dict:
        return run(engine.record_evaluation, study_id, body.batch_id,
                   body.item_id, body.rater_id, body.response)

    @app.get("/studies/{study_id}/export")
    def export(study_id: str) -> dict:
        return run(engine.export_study, study_id)

    @app.get("/studies/{study_id}/overview")
    def overview(study_id: str) -> dict:
        return run(engine.overview, study_id)

    return app
