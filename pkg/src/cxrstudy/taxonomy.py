"""Finding taxonomy, assertion labels, and per-report label vectors.

The default taxonomy is the standard CheXpert 14-finding set. Each report
gets one assertion label per finding; "No Finding" is a derived summary
label that may not coexist with a positive pathology finding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class AssertionLabel(Enum):
    """Per-finding assertion status extracted from report text."""

    POSITIVE = "positive"
    UNCERTAIN = "uncertain"
    NEGATIVE = "negative"
    NOT_MENTIONED = "not-mentioned"

    @property
    def precedence(self) -> int:
        """Aggregation precedence: positive > uncertain > negative > not-mentioned."""
        return _PRECEDENCE[self]

    @staticmethod
    def strongest(labels: Iterable["AssertionLabel"]) -> "AssertionLabel":
        """Combine labels for one finding across mentions by precedence."""
        best = AssertionLabel.NOT_MENTIONED
        for lab in labels:
            if lab.precedence > best.precedence:
                best = lab
        return best

    @staticmethod
    def from_string(value: str) -> "AssertionLabel":
        try:
            return AssertionLabel(value)
        except ValueError:
            raise ValueError(f"unknown assertion label {value!r}") from None


_PRECEDENCE = {
    AssertionLabel.POSITIVE: 3,
    AssertionLabel.UNCERTAIN: 2,
    AssertionLabel.NEGATIVE: 1,
    AssertionLabel.NOT_MENTIONED: 0,
}

NO_FINDING = "No Finding"
SUPPORT_DEVICES = "Support Devices"

# Canonical CheXpert-14 ordering.
CHEXPERT_FINDINGS: tuple[str, ...] = (
    "No Finding",
    "Enlarged Cardiomediastinum",
    "Cardiomegaly",
    "Lung Opacity",
    "Lung Lesion",
    "Edema",
    "Consolidation",
    "Pneumonia",
    "Atelectasis",
    "Pneumothorax",
    "Pleural Effusion",
    "Pleural Other",
    "Fracture",
    "Support Devices",
)

TOP5_MIMIC: tuple[str, ...] = (
    "Atelectasis",
    "Cardiomegaly",
    "Edema",
    "Consolidation",
    "Pleural Effusion",
)

TOP5_CLINICAL: tuple[str, ...] = (
    "Support Devices",
    "Pleural Effusion",
    "Lung Opacity",
    "Pneumonia",
    "Lung Lesion",
)


@dataclass(frozen=True)
class FindingTaxonomy:
    """An ordered finding list plus the two top-5 subsets used for F1-5."""

    findings: tuple[str, ...] = CHEXPERT_FINDINGS
    top5_mimic: tuple[str, ...] = TOP5_MIMIC
    top5_clinical: tuple[str, ...] = TOP5_CLINICAL

    def __post_init__(self) -> None:
        if len(self.findings) != 14:
            raise ValueError(f"taxonomy must have exactly 14 findings, got {len(self.findings)}")
        if len(set(self.findings)) != 14:
            raise ValueError("finding identifiers must be unique")
        for name, subset in (("top5_mimic", self.top5_mimic), ("top5_clinical", self.top5_clinical)):
            if len(subset) != 5 or len(set(subset)) != 5:
                raise ValueError(f"{name} must contain 5 distinct findings")
            missing = [f for f in subset if f not in self.findings]
            if missing:
                raise ValueError(f"{name} entries not in taxonomy: {missing}")

    def index(self, finding: str) -> int:
        try:
            return self.findings.index(finding)
        except ValueError:
            raise KeyError(f"unknown finding {finding!r}") from None

    @property
    def pathology_findings(self) -> tuple[str, ...]:
        """All findings except the summary label and support devices."""
        return tuple(f for f in self.findings if f not in (NO_FINDING, SUPPORT_DEVICES))


DEFAULT_TAXONOMY = FindingTaxonomy()


@dataclass(frozen=True)
class LabelVector:
    """One assertion label per finding, aligned with the taxonomy order."""

    labels: tuple[AssertionLabel, ...]
    taxonomy: FindingTaxonomy = field(default=DEFAULT_TAXONOMY, compare=False)

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.taxonomy.findings):
            raise ValueError(
                f"label vector must have {len(self.taxonomy.findings)} entries, got {len(self.labels)}"
            )
        for lab in self.labels:
            if not isinstance(lab, AssertionLabel):
                raise TypeError(f"labels must be AssertionLabel, got {lab!r}")

    def __getitem__(self, finding: str) -> AssertionLabel:
        return self.labels[self.taxonomy.index(finding)]

    def as_dict(self) -> dict[str, AssertionLabel]:
        return dict(zip(self.taxonomy.findings, self.labels))

    def as_strings(self) -> dict[str, str]:
        return {f: lab.value for f, lab in zip(self.taxonomy.findings, self.labels)}

    @classmethod
    def uniform(cls, label: AssertionLabel, taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY) -> "LabelVector":
        return cls(labels=tuple(label for _ in taxonomy.findings), taxonomy=taxonomy)

    @classmethod
    def from_dict(
        cls,
        mapping: Mapping[str, AssertionLabel | str],
        taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY,
        fill: AssertionLabel | None = None,
    ) -> "LabelVector":
        """Build a vector from a finding->label mapping.

        With ``fill`` unset, the mapping must cover all 14 findings; unknown
        finding names are always rejected.
        """
        unknown = [k for k in mapping if k not in taxonomy.findings]
        if unknown:
            raise KeyError(f"unknown findings in mapping: {unknown}")
        labels = []
        for f in taxonomy.findings:
            if f in mapping:
                raw = mapping[f]
                labels.append(raw if isinstance(raw, AssertionLabel) else AssertionLabel.from_string(raw))
            elif fill is not None:
                labels.append(fill)
            else:
                raise KeyError(f"mapping missing finding {f!r} and no fill label given")
        return cls(labels=tuple(labels), taxonomy=taxonomy)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_label_vector(vector: LabelVector) -> ValidationResult:
    """Check vector invariants: length and No-Finding exclusivity.

    "No Finding" positive excludes a positive pathology finding; support
    devices are exempt from the exclusivity rule.
    """
    violations: list[str] = []
    taxonomy = vector.taxonomy
    if len(vector.labels) != len(taxonomy.findings):
        violations.append(
            f"expected {len(taxonomy.findings)} labels, got {len(vector.labels)}"
        )
        return ValidationResult(ok=False, violations=tuple(violations))
    if vector[NO_FINDING] is AssertionLabel.POSITIVE:
        for finding in taxonomy.pathology_findings:
            if vector[finding] is AssertionLabel.POSITIVE:
                violations.append(
                    f"'No Finding' is positive but pathology finding {finding!r} is positive"
                )
    return ValidationResult(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class ScoredLabelVector:
    """Per-finding positivity probability in [0, 1]."""

    probabilities: tuple[float, ...]
    taxonomy: FindingTaxonomy = field(default=DEFAULT_TAXONOMY, compare=False)

    def __post_init__(self) -> None:
        if len(self.probabilities) != len(self.taxonomy.findings):
            raise ValueError(
                f"expected {len(self.taxonomy.findings)} probabilities, got {len(self.probabilities)}"
            )
        for p in self.probabilities:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"probability {p} outside [0, 1]")

    def __getitem__(self, finding: str) -> float:
        return self.probabilities[self.taxonomy.index(finding)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.taxonomy.findings, self.probabilities))
