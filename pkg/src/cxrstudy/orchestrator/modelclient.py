"""Report-generation model client.

The model lives behind a network contract: request {case_id, image_refs,
history_note}, response {report_text, findings: [{finding, probability}],
model_version}. HttpModelClient talks to a real or mock server;
LocalTemplateModel produces the same deterministic drafts in-process for
simulations. Both share render_template_report so a mock server and the
local model agree byte for byte.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests

from ..taxonomy import DEFAULT_TAXONOMY, FindingTaxonomy, ScoredLabelVector

__all__ = [
    "ModelDraft",
    "ModelClient",
    "ModelClientError",
    "HttpModelClient",
    "LocalTemplateModel",
    "render_template_report",
    "MODEL_VERSION",
]

MODEL_VERSION = "mock-cxr-1"
DEFAULT_MODEL_TIMEOUT_S = 10.0


class ModelClientError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelDraft:
    report_text: str
    finding_probabilities: ScoredLabelVector
    latency_ms: float
    model_version: str


class ModelClient(Protocol):
    def generate(self, case_id: str, image_refs: Sequence[str],
                 history_note: str) -> ModelDraft:
        ...


_TEMPLATE_SENTENCES = (
    ("Cardiomegaly", "The cardiac silhouette is enlarged."),
    ("Pleural Effusion", "There is a small right pleural effusion."),
    ("Pneumonia", "Patchy opacity in the right lower lobe suggestive of pneumonia."),
    ("Atelectasis", "Bibasilar atelectasis is present."),
    ("Edema", "Mild interstitial edema."),
    ("Support Devices", "An endotracheal tube is in standard position."),
)


def _case_digest(case_id: str, history_note: str) -> bytes:
    return hashlib.sha256(f"{case_id}\x00{history_note}".encode("utf-8")).digest()


def render_template_report(case_id: str, image_refs: Sequence[str],
                           history_note: str = "",
                           taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY) -> dict:
    """Deterministic canned report for a case; pure function of its inputs.

    Picks template sentences from a digest of (case_id, history_note) and
    assigns each finding a stable pseudo-probability, so repeated calls --
    in-process or across a mock server -- return identical payloads.
    """
    digest = _case_digest(case_id, history_note)
    picks = [
        sentence for i, (_, sentence) in enumerate(_TEMPLATE_SENTENCES)
        if digest[i] % 3 == 0
    ]
    body = " ".join(picks) if picks else "No acute cardiopulmonary abnormality."
    views = f"Views: {len(image_refs)}." if image_refs else ""
    text = " ".join(part for part in ("Findings:", body, views, "Impression: see findings.") if part)

    mentioned = {f for i, (f, _) in enumerate(_TEMPLATE_SENTENCES) if digest[i] % 3 == 0}
    probabilities = []
    for j, finding in enumerate(taxonomy.findings):
        base = digest[(j + 8) % len(digest)] / 255.0
        if finding in mentioned:
            prob = 0.5 + base / 2.0
        else:
            prob = base * 0.45
        probabilities.append(round(min(max(prob, 0.0), 1.0), 6))

    return {
        "report_text": text,
        "findings": [
            {"finding": f, "probability": p}
            for f, p in zip(taxonomy.findings, probabilities)
        ],
        "model_version": MODEL_VERSION,
    }


def _draft_from_payload(payload: dict, latency_ms: float,
                        taxonomy: FindingTaxonomy) -> ModelDraft:
    try:
        text = payload["report_text"]
        findings = payload["findings"]
        version = payload["model_version"]
    except (KeyError, TypeError) as exc:
        raise ModelClientError(f"malformed model response: missing {exc}") from exc
    if not isinstance(text, str) or not text.strip():
        raise ModelClientError("malformed model response: empty report_text")
    try:
        by_name = {str(f["finding"]): float(f["probability"]) for f in findings}
        probs = tuple(by_name[f] for f in taxonomy.findings)
        scored = ScoredLabelVector(probs, taxonomy)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelClientError(f"malformed model response findings: {exc}") from exc
    return ModelDraft(text, scored, latency_ms, str(version))


class HttpModelClient:
    """Client for the model server wire contract, POST {endpoint}/generate."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_MODEL_TIMEOUT_S,
                 taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY):
        if not endpoint:
            raise ValueError("endpoint must be given")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.taxonomy = taxonomy

    def generate(self, case_id: str, image_refs: Sequence[str],
                 history_note: str) -> ModelDraft:
        started = time.monotonic()
        try:
            resp = requests.post(
                f"{self.endpoint}/generate",
                json={"case_id": case_id, "image_refs": list(image_refs),
                      "history_note": history_note},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except requests.Timeout as exc:
            raise ModelClientError(
                f"model request timed out after {self.timeout}s"
            ) from exc
        except (requests.RequestException, ValueError) as exc:
            raise ModelClientError(f"model request failed: {exc}") from exc
        latency_ms = (time.monotonic() - started) * 1000.0
        return _draft_from_payload(payload, latency_ms, self.taxonomy)


class LocalTemplateModel:
    """In-process stand-in with a fixed nominal latency (no real waiting)."""

    def __init__(self, nominal_latency_ms: float = 3000.0,
                 taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY):
        self.nominal_latency_ms = nominal_latency_ms
        self.taxonomy = taxonomy

    def generate(self, case_id: str, image_refs: Sequence[str],
                 history_note: str) -> ModelDraft:
        payload = render_template_report(case_id, image_refs, history_note, self.taxonomy)
        return _draft_from_payload(payload, self.nominal_latency_ms, self.taxonomy)
