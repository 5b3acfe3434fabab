import pytest

from cxrstudy.taxonomy import (
    CHEXPERT_FINDINGS,
    DEFAULT_TAXONOMY,
    NO_FINDING,
    SUPPORT_DEVICES,
    AssertionLabel,
    FindingTaxonomy,
    LabelVector,
    ScoredLabelVector,
    validate_label_vector,
)


def test_canonical_finding_order():
    assert len(CHEXPERT_FINDINGS) == 14
    assert CHEXPERT_FINDINGS[0] == "No Finding"
    assert CHEXPERT_FINDINGS[-1] == "Support Devices"
    assert "Pneumonia" in CHEXPERT_FINDINGS


def test_top5_subsets_are_within_taxonomy():
    for subset in (DEFAULT_TAXONOMY.top5_mimic, DEFAULT_TAXONOMY.top5_clinical):
        assert len(subset) == 5
        assert all(f in CHEXPERT_FINDINGS for f in subset)


def test_taxonomy_rejects_wrong_cardinality():
    with pytest.raises(ValueError):
        FindingTaxonomy(findings=CHEXPERT_FINDINGS[:13])
    with pytest.raises(ValueError):
        FindingTaxonomy(findings=CHEXPERT_FINDINGS[:13] + ("Pneumonia",))


def test_assertion_precedence_ordering():
    assert AssertionLabel.POSITIVE.precedence > AssertionLabel.UNCERTAIN.precedence
    assert AssertionLabel.UNCERTAIN.precedence > AssertionLabel.NEGATIVE.precedence
    assert AssertionLabel.NEGATIVE.precedence > AssertionLabel.NOT_MENTIONED.precedence


def test_strongest_combines_by_precedence():
    assert AssertionLabel.strongest(
        [AssertionLabel.NEGATIVE, AssertionLabel.POSITIVE]) is AssertionLabel.POSITIVE
    assert AssertionLabel.strongest(
        [AssertionLabel.NEGATIVE, AssertionLabel.UNCERTAIN]) is AssertionLabel.UNCERTAIN
    assert AssertionLabel.strongest([]) is AssertionLabel.NOT_MENTIONED


def test_from_string_round_trip_and_rejection():
    for lab in AssertionLabel:
        assert AssertionLabel.from_string(lab.value) is lab
    with pytest.raises(ValueError):
        AssertionLabel.from_string("maybe")


def test_label_vector_indexing_and_dicts():
    vec = LabelVector.from_dict({"Pneumonia": "positive"},
                                fill=AssertionLabel.NOT_MENTIONED)
    assert vec["Pneumonia"] is AssertionLabel.POSITIVE
    assert vec["Edema"] is AssertionLabel.NOT_MENTIONED
    assert vec.as_strings()["Pneumonia"] == "positive"
    assert len(vec.as_dict()) == 14


def test_label_vector_from_dict_requires_full_cover_without_fill():
    with pytest.raises(KeyError):
        LabelVector.from_dict({"Pneumonia": "positive"})
    with pytest.raises(KeyError):
        LabelVector.from_dict({"Pneumonias": "positive"},
                              fill=AssertionLabel.NOT_MENTIONED)


def test_no_finding_exclusivity():
    bad = LabelVector.from_dict(
        {NO_FINDING: "positive", "Pneumonia": "positive"},
        fill=AssertionLabel.NOT_MENTIONED)
    result = validate_label_vector(bad)
    assert not result.ok
    assert any("Pneumonia" in v for v in result.violations)


def test_no_finding_allows_positive_support_devices():
    vec = LabelVector.from_dict(
        {NO_FINDING: "positive", SUPPORT_DEVICES: "positive"},
        fill=AssertionLabel.NOT_MENTIONED)
    assert validate_label_vector(vec).ok


def test_no_finding_with_uncertain_pathology_passes_structural_check():
    # exclusivity is defined against positive pathology only
    vec = LabelVector.from_dict(
        {NO_FINDING: "positive", "Edema": "uncertain"},
        fill=AssertionLabel.NOT_MENTIONED)
    assert validate_label_vector(vec).ok


def test_scored_vector_bounds():
    probs = tuple(0.5 for _ in range(14))
    assert ScoredLabelVector(probs)["Pneumonia"] == 0.5
    with pytest.raises(ValueError):
        ScoredLabelVector(tuple([1.5] + [0.0] * 13))
    with pytest.raises(ValueError):
        ScoredLabelVector(tuple([0.5] * 13))


def test_pathology_findings_excludes_summary_and_devices():
    path = DEFAULT_TAXONOMY.pathology_findings
    assert NO_FINDING not in path
    assert SUPPORT_DEVICES not in path
    assert len(path) == 12
