"""Study orchestration: randomization, timed reading sessions, senior
review, blinded evaluation batches, event-sourced persistence, HTTP API.
"""

from .clock import Clock, SimClock, SystemClock
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
from .modelclient import (
    HttpModelClient,
    LocalTemplateModel,
    ModelClientError,
    ModelDraft,
    render_template_report,
)

__all__ = [
    "Clock",
    "SimClock",
    "SystemClock",
    "StudyEngine",
    "OrchestratorError",
    "NotFoundError",
    "InvalidTransition",
    "ConflictError",
    "ForbiddenError",
    "ConcealmentError",
    "ValidationFailed",
    "ModelDraft",
    "ModelClientError",
    "HttpModelClient",
    "LocalTemplateModel",
    "render_template_report",
]
