"""Chest X-ray report evaluation and reader-study tooling.

Subpackages cover rule-based report labeling, entity/relation graph
overlap scoring, finding-level classification metrics, trial statistics,
blinded subjective evaluation, and an event-sourced study workflow with
an HTTP API. Everything is plain numpy/stdlib; the report-generation
model itself is abstracted behind a network client.
"""

__version__ = "0.1.0"

from cxrstudy.taxonomy import (
    AssertionLabel,
    FindingTaxonomy,
    LabelVector,
    ScoredLabelVector,
    DEFAULT_TAXONOMY,
    validate_label_vector,
)
from cxrstudy.corpus import Arm, AuthorRole, Report, parse_report_corpus

__all__ = [
    "AssertionLabel",
    "FindingTaxonomy",
    "LabelVector",
    "ScoredLabelVector",
    "DEFAULT_TAXONOMY",
    "validate_label_vector",
    "Arm",
    "AuthorRole",
    "Report",
    "parse_report_corpus",
    "__version__",
]
