"""HTTP client for an external report-labeling service.

Wire contract: POST {endpoint}/label with {"report_id", "text"}; the
service answers {"report_id", "labels": {finding: label}} with one entry
per finding. Responses are validated before being accepted, and failures
never abort the batch -- they come back itemized per report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import requests

from .corpus import Report
from .taxonomy import (
    DEFAULT_TAXONOMY,
    AssertionLabel,
    FindingTaxonomy,
    LabelVector,
    validate_label_vector,
)

__all__ = ["RemoteLabelError", "RemoteLabelOutcome", "remote_label"]

DEFAULT_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class RemoteLabelError:
    report_id: str
    reason: str


@dataclass(frozen=True)
class RemoteLabelOutcome:
    """Per-report results aligned with the input order.

    ``vectors[i]`` is None exactly when report i failed; the failure is
    itemized in ``errors``.
    """

    vectors: tuple[Optional[LabelVector], ...]
    errors: tuple[RemoteLabelError, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def _parse_response(report_id: str, payload: dict,
                    taxonomy: FindingTaxonomy) -> LabelVector:
    if payload.get("report_id") != report_id:
        raise ValueError(
            f"response report_id {payload.get('report_id')!r} does not match request"
        )
    labels = payload.get("labels")
    if not isinstance(labels, dict):
        raise ValueError("response missing 'labels' object")
    if len(labels) != len(taxonomy.findings):
        raise ValueError(
            f"expected {len(taxonomy.findings)} labels, got {len(labels)}"
        )
    parsed = {
        finding: AssertionLabel.from_string(str(value))
        for finding, value in labels.items()
    }
    vector = LabelVector.from_dict(parsed, taxonomy)
    result = validate_label_vector(vector)
    if not result.ok:
        raise ValueError("; ".join(result.violations))
    return vector


def _label_one(session: requests.Session, endpoint: str, report: Report,
               timeout: float, taxonomy: FindingTaxonomy) -> LabelVector:
    resp = session.post(
        f"{endpoint.rstrip('/')}/label",
        json={"report_id": report.report_id, "text": report.text},
        timeout=timeout,
    )
    resp.raise_for_status()
    return _parse_response(report.report_id, resp.json(), taxonomy)


def remote_label(reports: Sequence[Report], endpoint: str,
                 timeout: float = DEFAULT_TIMEOUT_S, max_workers: int = 8,
                 taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY) -> RemoteLabelOutcome:
    """Label a batch against a remote service with bounded parallelism."""
    if not endpoint:
        raise ValueError("endpoint must be given")
    vectors: list[Optional[LabelVector]] = [None] * len(reports)
    errors: list[RemoteLabelError] = []

    with requests.Session() as session:
        def work(idx: int) -> None:
            report = reports[idx]
            try:
                vectors[idx] = _label_one(session, endpoint, report, timeout, taxonomy)
            except (requests.RequestException, ValueError, KeyError) as exc:
                errors.append(RemoteLabelError(report.report_id, str(exc)))

        if reports:
            with ThreadPoolExecutor(max_workers=min(max_workers, len(reports))) as pool:
                list(pool.map(work, range(len(reports))))

    errors.sort(key=lambda e: e.report_id)
    return RemoteLabelOutcome(tuple(vectors), tuple(errors))
