"""Report records and corpus file parsing (jsonl / csv).

A corpus is one record per line. Records carry the report text, provenance
(author role, trial arm, revision parent), opaque image references, the
clinical history note, and optionally reference labels. Label values are
serialized as lowercase strings; image refs in csv are ';'-joined.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from cxrstudy.taxonomy import (
    DEFAULT_TAXONOMY,
    AssertionLabel,
    FindingTaxonomy,
    LabelVector,
)


class AuthorRole(Enum):
    AI_MODEL = "ai-model"
    JUNIOR = "junior"
    SENIOR_RELEASED = "senior-released"


class Arm(Enum):
    AI_ASSISTED = "ai-assisted"
    STANDARD_CARE = "standard-care"


@dataclass(frozen=True)
class Report:
    """A free-text radiology report with provenance."""

    report_id: str
    case_id: str
    text: str
    author_role: AuthorRole = AuthorRole.JUNIOR
    arm: Arm | None = None
    parent_report_id: str | None = None
    image_refs: tuple[str, ...] = ()
    history_note: str = ""
    labels: LabelVector | None = None

    def __post_init__(self) -> None:
        if not self.report_id:
            raise ValueError("report_id must be non-empty")
        if not self.image_refs:
            raise ValueError(f"report {self.report_id!r}: image_refs must be non-empty")
        if self.author_role is AuthorRole.SENIOR_RELEASED and not self.parent_report_id:
            raise ValueError(
                f"report {self.report_id!r}: senior-released reports must have a parent_report_id"
            )


class CorpusError(Exception):
    """Raised for malformed corpus files. Carries per-record issues."""

    def __init__(self, message: str, issues: list[tuple[int, str]] | None = None):
        super().__init__(message)
        self.issues = issues or []


CSV_COLUMNS = [
    "report_id",
    "case_id",
    "text",
    "author_role",
    "arm",
    "parent_report_id",
    "image_refs",
    "history_note",
    "labels",
]


def _record_to_report(rec: dict, line: int, taxonomy: FindingTaxonomy) -> Report:
    for required in ("report_id", "text", "image_refs"):
        if required not in rec or rec[required] in (None, "", []):
            raise CorpusError(f"line {line}: missing required field {required!r}")
    refs = rec["image_refs"]
    if isinstance(refs, str):
        refs = [r for r in refs.split(";") if r]
    if not isinstance(refs, list) or not refs:
        raise CorpusError(f"line {line}: image_refs must be a non-empty list")
    labels = None
    raw_labels = rec.get("labels")
    if raw_labels:
        if isinstance(raw_labels, str):
            pairs = [p.split("=", 1) for p in raw_labels.split(";") if p]
            raw_labels = {k: v for k, v in pairs}
        try:
            labels = LabelVector.from_dict(
                raw_labels, taxonomy=taxonomy, fill=AssertionLabel.NOT_MENTIONED
            )
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"line {line}: bad labels: {exc}") from None
    try:
        return Report(
            report_id=str(rec["report_id"]),
            case_id=str(rec.get("case_id", "") or rec["report_id"]),
            text=str(rec["text"]),
            author_role=AuthorRole(rec.get("author_role") or "junior"),
            arm=Arm(rec["arm"]) if rec.get("arm") else None,
            parent_report_id=rec.get("parent_report_id") or None,
            image_refs=tuple(str(r) for r in refs),
            history_note=str(rec.get("history_note", "") or ""),
            labels=labels,
        )
    except ValueError as exc:
        raise CorpusError(f"line {line}: {exc}") from None


def _iter_records(path: Path, fmt: str):
    """Yield (line_number, raw_record_dict | CorpusError)."""
    if fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    yield line_no, CorpusError(f"line {line_no}: invalid json: {exc.msg}")
                    continue
                if not isinstance(rec, dict):
                    yield line_no, CorpusError(f"line {line_no}: record must be an object")
                    continue
                yield line_no, rec
    elif fmt == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for line_no, row in enumerate(reader, start=2):
                yield line_no, {k: v for k, v in row.items() if v not in (None, "")}
    else:
        raise ValueError(f"unknown corpus format {fmt!r} (expected 'jsonl' or 'csv')")


def parse_report_corpus(
    path: str | Path,
    fmt: str = "jsonl",
    taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY,
    on_error: str = "raise",
) -> list[Report] | tuple[list[Report], list[tuple[int, str]]]:
    """Parse a corpus file record-by-record, preserving order.

    ``on_error="raise"`` raises :class:`CorpusError` naming the line and
    reason of every invalid record. ``on_error="collect"`` returns
    ``(valid_reports, issues)`` with issues as ``(line, reason)`` pairs.
    """
    if on_error not in ("raise", "collect"):
        raise ValueError("on_error must be 'raise' or 'collect'")
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    reports: list[Report] = []
    issues: list[tuple[int, str]] = []
    seen_ids: dict[str, int] = {}
    for line_no, rec in _iter_records(path, fmt):
        if isinstance(rec, CorpusError):
            issues.append((line_no, str(rec)))
            continue
        try:
            report = _record_to_report(rec, line_no, taxonomy)
        except CorpusError as exc:
            issues.append((line_no, str(exc)))
            continue
        if report.report_id in seen_ids:
            issues.append(
                (line_no, f"line {line_no}: duplicate report_id {report.report_id!r} "
                          f"(first seen at line {seen_ids[report.report_id]})")
            )
            continue
        seen_ids[report.report_id] = line_no
        reports.append(report)
    if not reports and not issues:
        raise CorpusError(f"empty corpus: {path}")
    if issues and on_error == "raise":
        raise CorpusError(
            f"{len(issues)} invalid record(s) in {path}: " + "; ".join(msg for _, msg in issues),
            issues=issues,
        )
    if on_error == "collect":
        return reports, issues
    return reports


def _report_to_record(report: Report) -> dict:
    rec: dict = {
        "report_id": report.report_id,
        "case_id": report.case_id,
        "text": report.text,
        "author_role": report.author_role.value,
    }
    if report.arm is not None:
        rec["arm"] = report.arm.value
    if report.parent_report_id:
        rec["parent_report_id"] = report.parent_report_id
    rec["image_refs"] = list(report.image_refs)
    if report.history_note:
        rec["history_note"] = report.history_note
    if report.labels is not None:
        rec["labels"] = report.labels.as_strings()
    return rec


def serialize_report_corpus(reports: Iterable[Report], path: str | Path, fmt: str = "jsonl") -> None:
    """Write reports in canonical form (stable field order, lowercase labels)."""
    path = Path(path)
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for report in reports:
                fh.write(json.dumps(_report_to_record(report), ensure_ascii=False) + "\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for report in reports:
                rec = _report_to_record(report)
                row = {
                    "report_id": rec["report_id"],
                    "case_id": rec["case_id"],
                    "text": rec["text"],
                    "author_role": rec["author_role"],
                    "arm": rec.get("arm", ""),
                    "parent_report_id": rec.get("parent_report_id", ""),
                    "image_refs": ";".join(rec["image_refs"]),
                    "history_note": rec.get("history_note", ""),
                    "labels": ";".join(f"{k}={v}" for k, v in rec.get("labels", {}).items()),
                }
                writer.writerow(row)
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")


def dumps_report_corpus(reports: Iterable[Report]) -> str:
    """Canonical jsonl serialization as a string (normal form for round trips)."""
    buf = io.StringIO()
    for report in reports:
        buf.write(json.dumps(_report_to_record(report), ensure_ascii=False) + "\n")
    return buf.getvalue()
