"""Finding-level classification metrics.

Covers confusion counts under an uncertainty-mapping policy, micro and
macro F1 over finding subsets, Cohen's kappa with an explicit degenerate
sentinel, and ROC AUC computed two ways (rank statistic and trapezoidal
curve) that must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .taxonomy import AssertionLabel, LabelVector

__all__ = [
    "PositivePolicy",
    "DEFAULT_POLICY",
    "ConfusionCounts",
    "F1Report",
    "RocResult",
    "DEGENERATE",
    "confusion_counts",
    "f1_scores",
    "cohens_kappa",
    "roc_auc",
]


@dataclass(frozen=True)
class PositivePolicy:
    """How non-binary assertion labels map to the binary task.

    ``uncertain_maps_to`` is configurable; not-mentioned always maps to
    negative. The policy is carried on metric outputs so a table can never
    be read without knowing which mapping produced it.
    """

    uncertain_maps_to: str = "positive"

    def __post_init__(self) -> None:
        if self.uncertain_maps_to not in ("positive", "negative"):
            raise ValueError(
                f"uncertain_maps_to must be 'positive' or 'negative', got {self.uncertain_maps_to!r}"
            )

    def binarize(self, label: AssertionLabel) -> bool:
        if label is AssertionLabel.POSITIVE:
            return True
        if label is AssertionLabel.UNCERTAIN:
            return self.uncertain_maps_to == "positive"
        return False

    def describe(self) -> str:
        return f"uncertain->{self.uncertain_maps_to}, not-mentioned->negative"


DEFAULT_POLICY = PositivePolicy()


class _Degenerate:
    """Sentinel for agreement statistics whose chance correction blows up."""

    _instance = None

    def __new__(cls) -> "_Degenerate":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DEGENERATE"


DEGENERATE = _Degenerate()


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    policy: PositivePolicy = field(default=DEFAULT_POLICY, compare=False)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        if denom == 0:
            return 0.0
        return 2 * self.tp / denom

    @property
    def has_support(self) -> bool:
        """True when the F1 for these counts is meaningful."""
        return (self.tp + self.fn) > 0 or (self.tp + self.fp) > 0


def _check_aligned(pred: Sequence[LabelVector], ref: Sequence[LabelVector]) -> None:
    if len(pred) != len(ref):
        raise ValueError(f"pred/ref length mismatch: {len(pred)} vs {len(ref)}")
    if not pred:
        raise ValueError("need at least one report")


def confusion_counts(pred: Sequence[LabelVector], ref: Sequence[LabelVector],
                     finding: str, policy: PositivePolicy = DEFAULT_POLICY) -> ConfusionCounts:
    """Binary confusion counts for one finding after policy mapping."""
    _check_aligned(pred, ref)
    tp = fp = fn = tn = 0
    for p, r in zip(pred, ref):
        pb = policy.binarize(p[finding])
        rb = policy.binarize(r[finding])
        if pb and rb:
            tp += 1
        elif pb and not rb:
            fp += 1
        elif not pb and rb:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn, policy)


@dataclass(frozen=True)
class F1Report:
    micro_f1: float
    macro_f1: float
    per_finding_f1: dict[str, float]
    excluded_findings: tuple[str, ...]
    policy: PositivePolicy


def f1_scores(pred: Sequence[LabelVector], ref: Sequence[LabelVector],
              subset: Sequence[str], policy: PositivePolicy = DEFAULT_POLICY) -> F1Report:
    """Micro and macro F1 over a subset of findings.

    Micro pools counts across the subset. Macro averages per-finding F1,
    excluding findings with no support on either side (all true negatives);
    excluded findings are reported by name. If every finding is excluded
    the macro average is defined as 0.0.
    """
    if not subset:
        raise ValueError("subset must not be empty")
    _check_aligned(pred, ref)

    per_finding: dict[str, float] = {}
    excluded: list[str] = []
    pooled_tp = pooled_fp = pooled_fn = 0
    for finding in subset:
        counts = confusion_counts(pred, ref, finding, policy)
        pooled_tp += counts.tp
        pooled_fp += counts.fp
        pooled_fn += counts.fn
        per_finding[finding] = counts.f1()
        if not counts.has_support:
            excluded.append(finding)

    micro_denom = 2 * pooled_tp + pooled_fp + pooled_fn
    micro = 2 * pooled_tp / micro_denom if micro_denom else 0.0
    included = [f for f in subset if f not in excluded]
    macro = (math.fsum(per_finding[f] for f in included) / len(included)
             if included else 0.0)
    return F1Report(micro, macro, per_finding, tuple(excluded), policy)


def cohens_kappa(pred: Sequence[LabelVector], ref: Sequence[LabelVector],
                 finding: str, policy: PositivePolicy = DEFAULT_POLICY):
    """Cohen's kappa over the binarized 2x2 table.

    Returns the DEGENERATE sentinel when expected agreement is exactly 1
    (both marginals concentrated on the same single cell), where kappa is
    undefined. The degeneracy test runs on integer counts, so it cannot be
    fooled by float rounding.
    """
    _check_aligned(pred, ref)
    n = len(pred)
    pred_pos = ref_pos = agree = 0
    for p, r in zip(pred, ref):
        pb = policy.binarize(p[finding])
        rb = policy.binarize(r[finding])
        pred_pos += pb
        ref_pos += rb
        agree += pb == rb

    pe_num = pred_pos * ref_pos + (n - pred_pos) * (n - ref_pos)
    pe_den = n * n
    if pe_num == pe_den:
        return DEGENERATE
    po = agree / n
    pe = pe_num / pe_den
    return (po - pe) / (1.0 - pe)


@dataclass(frozen=True)
class RocResult:
    auc: float
    curve: tuple[tuple[float, float], ...]

    @property
    def auc_trapezoid(self) -> float:
        total = 0.0
        for (x0, y0), (x1, y1) in zip(self.curve, self.curve[1:]):
            total += (x1 - x0) * (y0 + y1) / 2.0
        return total


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for idx in order[i:j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> RocResult:
    """ROC AUC with tie handling, plus the trapezoidal curve.

    The reported AUC is the Mann-Whitney rank statistic (ties count 0.5);
    the curve is built by sweeping score thresholds downward. The two
    computations must agree to 1e-12 -- disagreement indicates a bug and
    raises.
    """
    if len(scores) != len(labels):
        raise ValueError(f"scores/labels length mismatch: {len(scores)} vs {len(labels)}")
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = sum(1 for y in labels if y == 0)
    if n_pos + n_neg != len(labels):
        raise ValueError("labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: both classes must be present")

    ranks = _midranks(scores)
    rank_sum_pos = math.fsum(r for r, y in zip(ranks, labels) if y == 1)
    auc_rank = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    # Threshold sweep: group tied scores so plateaus become single segments.
    by_score: dict[float, list[int]] = {}
    for s, y in zip(scores, labels):
        by_score.setdefault(float(s), []).append(y)
    curve = [(0.0, 0.0)]
    tp = fp = 0
    for s in sorted(by_score, reverse=True):
        group = by_score[s]
        tp += sum(group)
        fp += len(group) - sum(group)
        curve.append((fp / n_neg, tp / n_pos))

    result = RocResult(auc_rank, tuple(curve))
    if abs(result.auc_trapezoid - auc_rank) > 1e-12:
        raise RuntimeError(
            f"AUC implementations disagree: rank={auc_rank!r} trapezoid={result.auc_trapezoid!r}"
        )
    return result
