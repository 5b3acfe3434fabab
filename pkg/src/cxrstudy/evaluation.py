"""Blinded subjective-evaluation instruments.

Builds provenance-free evaluation items from per-case report sets, keeps
the unblinding key separate, validates rater responses, and aggregates
them: source-guess confusion matrix, per-arm agreement summaries, and
inter-rater concordance.
"""

from __future__ import annotations

import json
import random
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .stats import RatingMatrix, SummaryStat, kendalls_w, summarize

__all__ = [
    "Instrument",
    "SourcedReport",
    "EvaluationCase",
    "EvaluationItem",
    "EvaluationRecord",
    "BlindedBatch",
    "EvaluationLog",
    "DuplicateRecordError",
    "build_blinded_items",
    "validate_response",
    "scan_for_provenance",
    "confusion_matrix",
    "ConfusionMatrixResult",
    "radpeer_summary",
    "interrater_report",
]


class Instrument(Enum):
    LIKERT_QUALITY = "likert_quality"
    RADPEER_AGREEMENT = "radpeer_agreement"
    PAIRWISE_PREFERENCE = "pairwise_preference"
    SOURCE_GUESS = "source_guess"


@dataclass(frozen=True)
class SourcedReport:
    """A report text plus its private source tag (arm or origin).

    The source never enters an EvaluationItem; it only feeds the key.
    """

    source: str
    text: str


@dataclass(frozen=True)
class EvaluationCase:
    case_id: str
    reports: tuple[SourcedReport, ...]

    def __post_init__(self) -> None:
        if not self.reports:
            raise ValueError(f"case {self.case_id!r} supplies no reports")
        sources = [r.source for r in self.reports]
        if len(sources) != len(set(sources)):
            raise ValueError(f"case {self.case_id!r} has duplicate sources")


@dataclass(frozen=True)
class EvaluationItem:
    item_id: str
    case_id: str
    instrument: Instrument
    payload: dict[str, str]
    display_order_seed: int

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "case_id": self.case_id,
            "instrument": self.instrument.value,
            "payload": dict(self.payload),
            "display_order_seed": self.display_order_seed,
        }


@dataclass(frozen=True)
class EvaluationRecord:
    item_id: str
    rater_id: str
    response: str | int
    timestamp: float


@dataclass(frozen=True)
class BlindedBatch:
    """Items plus the private unblinding key (item_id -> slot -> source)."""

    instrument: Instrument
    seed: int
    items: tuple[EvaluationItem, ...]
    key: dict[str, dict[str, str]]

    def items_as_dicts(self) -> list[dict]:
        return [item.to_dict() for item in self.items]


# Field-name tokens that would leak provenance if present in a payload.
_FORBIDDEN_TOKENS = {"arm", "ai", "author", "author_role", "source", "model",
                     "provenance", "role", "origin"}


def scan_for_provenance(obj: object) -> list[str]:
    """Return field names anywhere in ``obj`` that leak provenance.

    Field names are split on non-alphanumerics and checked token-wise, so
    "report_text" passes but "ai_text", "arm" or "source_tag" fail.
    """
    offenders: list[str] = []

    def walk(node: object) -> None:
        if isinstance(node, Mapping):
            for key, value in node.items():
                tokens = re.split(r"[^a-zA-Z0-9]+", str(key).lower())
                if any(t in _FORBIDDEN_TOKENS for t in tokens if t):
                    offenders.append(str(key))
                walk(value)
        elif isinstance(node, (list, tuple)):
            for value in node:
                walk(value)

    walk(obj)
    return offenders


def _require_report_count(case: EvaluationCase, count: int, instrument: Instrument) -> None:
    if len(case.reports) != count:
        raise ValueError(
            f"instrument {instrument.value} needs {count} report(s) per case, "
            f"case {case.case_id!r} has {len(case.reports)}"
        )


def build_blinded_items(cases: Sequence[EvaluationCase], instrument: Instrument,
                        seed: int) -> BlindedBatch:
    """Deterministically build provenance-free items for one instrument.

    Single-report instruments (likert, radpeer, source-guess) emit one item
    per (case, report); pairwise preference emits one item per case with
    the two reports in seeded-random first/second order.
    """
    rng = random.Random(seed)
    items: list[EvaluationItem] = []
    key: dict[str, dict[str, str]] = {}

    for case in cases:
        if instrument is Instrument.PAIRWISE_PREFERENCE:
            _require_report_count(case, 2, instrument)
            order_seed = rng.randrange(2 ** 32)
            first, second = case.reports
            if random.Random(order_seed).random() < 0.5:
                first, second = second, first
            item_id = f"{instrument.value}-{case.case_id}"
            items.append(EvaluationItem(
                item_id, case.case_id, instrument,
                {"first_text": first.text, "second_text": second.text},
                order_seed,
            ))
            key[item_id] = {"first": first.source, "second": second.source}
        else:
            for k, report in enumerate(case.reports):
                order_seed = rng.randrange(2 ** 32)
                item_id = f"{instrument.value}-{case.case_id}-{k}"
                items.append(EvaluationItem(
                    item_id, case.case_id, instrument,
                    {"report_text": report.text},
                    order_seed,
                ))
                key[item_id] = {"report": report.source}

    batch = BlindedBatch(instrument, seed, tuple(items), key)
    leaked = scan_for_provenance([item.to_dict() for item in batch.items])
    if leaked:
        raise AssertionError(f"blinding violated by fields: {leaked}")
    return batch


def validate_response(instrument: Instrument, response: str | int,
                      scale_max: int = 5) -> None:
    """Raise ValueError when a response is outside the instrument's range."""
    if instrument in (Instrument.LIKERT_QUALITY, Instrument.RADPEER_AGREEMENT):
        if not isinstance(response, int) or isinstance(response, bool):
            raise ValueError(f"{instrument.value} response must be an integer")
        if not 1 <= response <= scale_max:
            raise ValueError(
                f"{instrument.value} response {response} outside 1..{scale_max}"
            )
    elif instrument is Instrument.PAIRWISE_PREFERENCE:
        if response not in ("first", "second"):
            raise ValueError("pairwise response must be 'first' or 'second'")
    elif instrument is Instrument.SOURCE_GUESS:
        if response not in ("ai", "published"):
            raise ValueError("source guess must be 'ai' or 'published'")
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown instrument {instrument!r}")


class DuplicateRecordError(ValueError):
    pass


class EvaluationLog:
    """Append-only record store; duplicate (item, rater) submissions rejected.

    Safe under concurrent submissions from distinct raters.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: list[EvaluationRecord] = []
        self._seen: set[tuple[str, str]] = set()

    def add(self, record: EvaluationRecord) -> None:
        with self._lock:
            pair = (record.item_id, record.rater_id)
            if pair in self._seen:
                raise DuplicateRecordError(
                    f"rater {record.rater_id!r} already responded to item {record.item_id!r}"
                )
            self._seen.add(pair)
            self._records.append(record)

    def records(self) -> tuple[EvaluationRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


@dataclass(frozen=True)
class ConfusionMatrixResult:
    """Source-guess outcome: counts[true_source][guessed_source]."""

    counts: dict[str, dict[str, int]]
    accuracy: float
    total: int


def confusion_matrix(records: Iterable[EvaluationRecord],
                     truth: Mapping[str, str]) -> ConfusionMatrixResult:
    """2x2 confusion counts for the source-guess task."""
    labels = ("ai", "published")
    counts = {t: {g: 0 for g in labels} for t in labels}
    total = 0
    correct = 0
    for rec in records:
        if rec.item_id not in truth:
            raise ValueError(f"no truth known for item {rec.item_id!r}")
        true_source = truth[rec.item_id]
        guess = str(rec.response)
        if true_source not in labels or guess not in labels:
            raise ValueError(f"unexpected source/guess: {true_source!r}/{guess!r}")
        counts[true_source][guess] += 1
        total += 1
        correct += true_source == guess
    if total == 0:
        raise ValueError("no records")
    return ConfusionMatrixResult(counts, correct / total, total)


def _group_scores(records: Iterable[EvaluationRecord],
                  batch: BlindedBatch) -> dict[str, dict[str, dict[str, int]]]:
    """source -> item_id -> rater_id -> score, for single-report instruments."""
    item_source = {item_id: slots["report"] for item_id, slots in batch.key.items()}
    grouped: dict[str, dict[str, dict[str, int]]] = {}
    for rec in records:
        if rec.item_id not in item_source:
            raise ValueError(f"record for unknown item {rec.item_id!r}")
        source = item_source[rec.item_id]
        grouped.setdefault(source, {}).setdefault(rec.item_id, {})[rec.rater_id] = int(rec.response)
    return grouped


def radpeer_summary(records: Iterable[EvaluationRecord],
                    batch: BlindedBatch) -> dict[str, SummaryStat]:
    """Per-source mean±SD of per-case scores (case score = mean over raters).

    Every item must have the same rater set; incomplete coverage is an
    error because a partial mean would silently bias the comparison.
    """
    grouped = _group_scores(records, batch)
    if not grouped:
        raise ValueError("no records")
    rater_sets = {
        frozenset(by_rater)
        for by_item in grouped.values()
        for by_rater in by_item.values()
    }
    if len(rater_sets) != 1:
        raise ValueError("incomplete rater coverage: items rated by different rater sets")

    out: dict[str, SummaryStat] = {}
    for source, by_item in sorted(grouped.items()):
        case_scores = [
            sum(by_rater.values()) / len(by_rater)
            for _, by_rater in sorted(by_item.items())
        ]
        out[source] = summarize(case_scores)
    return out


_CHOICE_CODES = {"first": 0.0, "second": 1.0, "ai": 0.0, "published": 1.0}


def interrater_report(records: Iterable[EvaluationRecord],
                      batches: Mapping[Instrument, BlindedBatch]) -> dict[str, float]:
    """Kendall's W per instrument over the complete rater x item matrix.

    Ordinal scores enter as-is; forced choices are coded 0/1 (midrank tie
    correction handles the mass ties).
    """
    by_instrument: dict[Instrument, dict[str, dict[str, float]]] = {}
    item_to_instrument = {
        item.item_id: inst for inst, batch in batches.items() for item in batch.items
    }
    for rec in records:
        inst = item_to_instrument.get(rec.item_id)
        if inst is None:
            raise ValueError(f"record for unknown item {rec.item_id!r}")
        value = (_CHOICE_CODES[str(rec.response)]
                 if isinstance(rec.response, str) else float(rec.response))
        by_instrument.setdefault(inst, {}).setdefault(rec.item_id, {})[rec.rater_id] = value

    out: dict[str, float] = {}
    for inst, by_item in sorted(by_instrument.items(), key=lambda kv: kv[0].value):
        item_ids = sorted(by_item)
        raters = sorted({r for by_rater in by_item.values() for r in by_rater})
        rows = []
        for rater in raters:
            row = []
            for item_id in item_ids:
                if rater not in by_item[item_id]:
                    raise ValueError(
                        f"incomplete matrix: rater {rater!r} missing item {item_id!r}"
                    )
                row.append(by_item[item_id][rater])
            rows.append(row)
        out[inst.value] = kendalls_w(RatingMatrix.from_rows(rows))
    return out
