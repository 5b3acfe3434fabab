"""Blinded evaluation instruments: blinding, determinism, aggregation."""

import json
import statistics

import pytest

from cxrstudy.evaluation import (
    BlindedBatch,
    DuplicateRecordError,
    EvaluationCase,
    EvaluationItem,
    EvaluationLog,
    EvaluationRecord,
    Instrument,
    SourcedReport,
    build_blinded_items,
    confusion_matrix,
    interrater_report,
    radpeer_summary,
    scan_for_provenance,
    validate_response,
)
from cxrstudy.stats import RatingMatrix, kendalls_w

SINGLE_REPORT_INSTRUMENTS = (
    Instrument.LIKERT_QUALITY,
    Instrument.RADPEER_AGREEMENT,
    Instrument.SOURCE_GUESS,
)


def paired_cases(n):
    return [
        EvaluationCase(f"case-{i:03d}", (
            SourcedReport("ai", f"Draft reading for study {i}."),
            SourcedReport("published", f"Reference reading for study {i}."),
        ))
        for i in range(n)
    ]


def rec(item_id, rater_id, response, ts=0.0):
    return EvaluationRecord(item_id, rater_id, response, ts)


def test_case_validation():
    with pytest.raises(ValueError):
        EvaluationCase("c1", ())
    with pytest.raises(ValueError):
        EvaluationCase("c1", (SourcedReport("ai", "a"), SourcedReport("ai", "b")))


def test_every_instrument_batch_is_provenance_free():
    cases = paired_cases(10)
    for instrument in Instrument:
        batch = build_blinded_items(cases, instrument, seed=3)
        assert scan_for_provenance(batch.items_as_dicts()) == []
        # the key still knows, it just travels separately
        assert all(set(slots.values()) <= {"ai", "published"}
                   for slots in batch.key.values())


def test_scan_catches_leaky_field_names():
    assert scan_for_provenance({"report_text": "x"}) == []
    assert scan_for_provenance({"ai_text": "x"}) == ["ai_text"]
    assert scan_for_provenance([{"nested": {"source_tag": 1}}]) == ["source_tag"]
    assert scan_for_provenance({"arm": "a"}) == ["arm"]


def test_item_dicts_never_carry_the_key():
    batch = build_blinded_items(paired_cases(4), Instrument.PAIRWISE_PREFERENCE, 9)
    for item in batch.items_as_dicts():
        assert set(item) == {"item_id", "case_id", "instrument", "payload",
                             "display_order_seed"}
        assert set(item["payload"]) == {"first_text", "second_text"}
    # the serialized items say nothing about who wrote what
    blob = json.dumps(batch.items_as_dicts())
    assert "published" not in blob


def test_build_is_deterministic_per_seed():
    cases = paired_cases(12)
    for instrument in Instrument:
        a = build_blinded_items(cases, instrument, seed=21)
        b = build_blinded_items(cases, instrument, seed=21)
        assert a.items == b.items
        assert a.key == b.key
    # a different seed reshuffles the pairwise order for at least one case
    a = build_blinded_items(cases, Instrument.PAIRWISE_PREFERENCE, seed=21)
    c = build_blinded_items(cases, Instrument.PAIRWISE_PREFERENCE, seed=22)
    assert [i.display_order_seed for i in a.items] != [i.display_order_seed for i in c.items]


def test_pairwise_payload_matches_key():
    cases = paired_cases(30)
    batch = build_blinded_items(cases, Instrument.PAIRWISE_PREFERENCE, seed=5)
    by_case = {c.case_id: {r.source: r.text for r in c.reports} for c in cases}
    for item in batch.items:
        slots = batch.key[item.item_id]
        assert item.payload["first_text"] == by_case[item.case_id][slots["first"]]
        assert item.payload["second_text"] == by_case[item.case_id][slots["second"]]


def test_pairwise_first_position_is_balanced():
    # over many cases the ai report lands in first position about half
    # the time; bounds are ~6 sigma for n=400
    cases = paired_cases(400)
    batch = build_blinded_items(cases, Instrument.PAIRWISE_PREFERENCE, seed=13)
    ai_first = sum(batch.key[i.item_id]["first"] == "ai" for i in batch.items)
    assert 140 <= ai_first <= 260


def test_single_report_instruments_emit_one_item_per_report():
    cases = paired_cases(6)
    for instrument in SINGLE_REPORT_INSTRUMENTS:
        batch = build_blinded_items(cases, instrument, seed=2)
        assert len(batch.items) == 12
        ids = [item.item_id for item in batch.items]
        assert ids == [f"{instrument.value}-case-{i:03d}-{k}"
                       for i in range(6) for k in range(2)]
        for item in batch.items:
            assert set(item.payload) == {"report_text"}
            assert set(batch.key[item.item_id]) == {"report"}


def test_pairwise_requires_exactly_two_reports():
    lone = [EvaluationCase("c1", (SourcedReport("ai", "text"),))]
    with pytest.raises(ValueError):
        build_blinded_items(lone, Instrument.PAIRWISE_PREFERENCE, seed=1)


def test_validate_response_ranges():
    for instrument in (Instrument.LIKERT_QUALITY, Instrument.RADPEER_AGREEMENT):
        for good in (1, 3, 5):
            validate_response(instrument, good)
        for bad in (0, 6, "3", 2.5, True):
            with pytest.raises(ValueError):
                validate_response(instrument, bad)
    validate_response(Instrument.PAIRWISE_PREFERENCE, "first")
    validate_response(Instrument.PAIRWISE_PREFERENCE, "second")
    with pytest.raises(ValueError):
        validate_response(Instrument.PAIRWISE_PREFERENCE, "both")
    validate_response(Instrument.SOURCE_GUESS, "ai")
    validate_response(Instrument.SOURCE_GUESS, "published")
    with pytest.raises(ValueError):
        validate_response(Instrument.SOURCE_GUESS, "human")


def test_log_rejects_duplicate_item_rater_pair():
    log = EvaluationLog()
    log.add(rec("item-1", "rater-a", 4))
    log.add(rec("item-1", "rater-b", 2))
    log.add(rec("item-2", "rater-a", 5))
    with pytest.raises(DuplicateRecordError):
        log.add(rec("item-1", "rater-a", 3))
    assert len(log) == 3
    assert [r.item_id for r in log.records()] == ["item-1", "item-1", "item-2"]


def test_confusion_matrix_hand_counts():
    truth = {"i1": "ai", "i2": "ai", "i3": "published"}
    records = [
        rec("i1", "r1", "ai"),
        rec("i2", "r1", "published"),
        rec("i3", "r1", "published"),
    ]
    result = confusion_matrix(records, truth)
    assert result.counts == {
        "ai": {"ai": 1, "published": 1},
        "published": {"ai": 0, "published": 1},
    }
    assert result.accuracy == pytest.approx(2 / 3)
    assert result.total == 3
    with pytest.raises(ValueError):
        confusion_matrix([rec("mystery", "r1", "ai")], truth)
    with pytest.raises(ValueError):
        confusion_matrix([], truth)


def radpeer_fixture():
    cases = paired_cases(2)
    batch = build_blinded_items(cases, Instrument.RADPEER_AGREEMENT, seed=4)
    # per item: rater-a then rater-b
    scores = {
        "radpeer_agreement-case-000-0": (2, 4),
        "radpeer_agreement-case-000-1": (5, 5),
        "radpeer_agreement-case-001-0": (4, 4),
        "radpeer_agreement-case-001-1": (3, 5),
    }
    records = [
        rec(item_id, rater, score)
        for item_id, (a, b) in scores.items()
        for rater, score in (("rater-a", a), ("rater-b", b))
    ]
    return batch, records


def test_radpeer_summary_per_source():
    batch, records = radpeer_fixture()
    out = radpeer_summary(records, batch)
    assert set(out) == {"ai", "published"}
    # item k=0 of each case is the ai report; case score = rater mean
    ai_scores = [(2 + 4) / 2, (4 + 4) / 2]
    pub_scores = [(5 + 5) / 2, (3 + 5) / 2]
    assert out["ai"].mean == pytest.approx(statistics.mean(ai_scores))
    assert out["ai"].sd == pytest.approx(statistics.stdev(ai_scores))
    assert out["published"].mean == pytest.approx(statistics.mean(pub_scores))
    assert out["published"].sd == pytest.approx(statistics.stdev(pub_scores))


def test_radpeer_summary_requires_complete_rater_coverage():
    batch, records = radpeer_fixture()
    with pytest.raises(ValueError):
        radpeer_summary(records[:-1], batch)
    with pytest.raises(ValueError):
        radpeer_summary([], batch)
    with pytest.raises(ValueError):
        radpeer_summary([rec("not-an-item", "r", 3)], batch)


def test_interrater_report_matches_direct_kendalls_w():
    cases = paired_cases(3)
    likert = build_blinded_items(cases, Instrument.LIKERT_QUALITY, seed=6)
    pairwise = build_blinded_items(cases, Instrument.PAIRWISE_PREFERENCE, seed=6)
    batches = {Instrument.LIKERT_QUALITY: likert,
               Instrument.PAIRWISE_PREFERENCE: pairwise}

    likert_scores = {
        "rater-a": [1, 2, 3, 4, 5, 4],
        "rater-b": [2, 3, 3, 5, 5, 4],
    }
    choices = {
        "rater-a": ["first", "second", "first"],
        "rater-b": ["first", "first", "second"],
    }
    records = []
    for rater, row in likert_scores.items():
        for item, score in zip(likert.items, row):
            records.append(rec(item.item_id, rater, score))
    for rater, row in choices.items():
        for item, choice in zip(pairwise.items, row):
            records.append(rec(item.item_id, rater, choice))

    out = interrater_report(records, batches)
    expected_likert = kendalls_w(RatingMatrix.from_rows(
        [likert_scores["rater-a"], likert_scores["rater-b"]]))
    coded = {"first": 0.0, "second": 1.0}
    expected_pairwise = kendalls_w(RatingMatrix.from_rows(
        [[coded[c] for c in choices["rater-a"]],
         [coded[c] for c in choices["rater-b"]]]))
    assert out["likert_quality"] == pytest.approx(expected_likert)
    assert out["pairwise_preference"] == pytest.approx(expected_pairwise)


def test_interrater_identical_raters_reach_full_concordance():
    cases = paired_cases(4)
    batch = build_blinded_items(cases, Instrument.LIKERT_QUALITY, seed=8)
    scores = [1, 2, 3, 4, 5, 1, 2, 3]
    records = [
        rec(item.item_id, rater, score)
        for rater in ("r1", "r2", "r3")
        for item, score in zip(batch.items, scores)
    ]
    out = interrater_report(records, {Instrument.LIKERT_QUALITY: batch})
    assert out["likert_quality"] == pytest.approx(1.0)


def test_interrater_incomplete_matrix_raises():
    cases = paired_cases(2)
    batch = build_blinded_items(cases, Instrument.LIKERT_QUALITY, seed=8)
    records = [rec(item.item_id, "r1", 3) for item in batch.items]
    records += [rec(batch.items[0].item_id, "r2", 4)]  # r2 skips the rest
    with pytest.raises(ValueError):
        interrater_report(records, {Instrument.LIKERT_QUALITY: batch})
    with pytest.raises(ValueError):
        interrater_report([rec("unknown", "r1", 3)],
                          {Instrument.LIKERT_QUALITY: batch})
