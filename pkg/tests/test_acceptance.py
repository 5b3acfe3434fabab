"""Acceptance gate: one test per core guarantee, one printed line each.

Every guarantee the package makes is exercised here end to end, at the
stated tolerance, against oracles written independently of the library
code. Run with ``pytest tests/test_acceptance.py -v -s`` to see one
PASS/FAIL line per criterion.
"""

import contextlib
import json
import math
import random
import time

import pytest
from fastapi.testclient import TestClient

from conftest import DATA_DIR, LABELS
from cxrstudy.corpus import Arm
from cxrstudy.evaluation import Instrument, scan_for_provenance
from cxrstudy.labeler import label_report, load_lexicon
from cxrstudy.metrics import (
    DEGENERATE,
    PositivePolicy,
    cohens_kappa,
    confusion_counts,
    f1_scores,
    roc_auc,
)
from cxrstudy.orchestrator.api import create_app
from cxrstudy.orchestrator.clock import SimClock
from cxrstudy.orchestrator.engine import StudyEngine
from cxrstudy.orchestrator.modelclient import LocalTemplateModel
from cxrstudy.radgraph import ENTITY_TYPES, Entity, Relation, ReportGraph, radgraph_f1
from cxrstudy.reporting import format_probability, format_score
from cxrstudy.simulate import SimulationConfig, simulate_study
from cxrstudy.stats import (
    PairedSample,
    RatingMatrix,
    kendalls_w,
    paired_t,
    percent_reduction,
    rm_anova,
)
from cxrstudy.taxonomy import DEFAULT_TAXONOMY, AssertionLabel, LabelVector

AI = Arm.AI_ASSISTED.value
STD = Arm.STANDARD_CARE.value


@contextlib.contextmanager
def criterion(name):
    """Print exactly one PASS/FAIL line for the wrapped criterion."""
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


# ------------------------------------------------------------------ helpers
# Oracles below restate the math from scratch (no calls into the module
# under test beyond the function being checked).

def oracle_binarize(label, uncertain_positive):
    if label is AssertionLabel.POSITIVE:
        return True
    if label is AssertionLabel.UNCERTAIN:
        return uncertain_positive
    return False


def oracle_confusion(pred, ref, finding, uncertain_positive):
    tp = fp = fn = tn = 0
    for p, r in zip(pred, ref):
        pb = oracle_binarize(p[finding], uncertain_positive)
        rb = oracle_binarize(r[finding], uncertain_positive)
        if pb and rb:
            tp += 1
        elif pb:
            fp += 1
        elif rb:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def oracle_f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def quick_corpus(rng, n):
    width = len(DEFAULT_TAXONOMY.findings)
    return [
        LabelVector(labels=tuple(rng.choices(LABELS, k=width)), taxonomy=DEFAULT_TAXONOMY)
        for _ in range(n)
    ]


def exact_moments(values, mean, sd):
    """Affine-map values to the requested mean and ddof-1 SD exactly."""
    n = len(values)
    mu = math.fsum(values) / n
    var = math.fsum((x - mu) ** 2 for x in values) / (n - 1)
    return [mean + (x - mu) * (sd / math.sqrt(var)) for x in values]


def test_metric_oracle_equivalence():
    with criterion("metric engine matches brute-force oracles (1000 instances)"):
        rng = random.Random(20260814)
        findings = DEFAULT_TAXONOMY.findings
        for _ in range(1000):
            n = rng.randint(2, 200)
            ref = quick_corpus(rng, n)
            pred = quick_corpus(rng, n)
            unc_pos = rng.random() < 0.5
            policy = PositivePolicy(
                uncertain_maps_to="positive" if unc_pos else "negative")
            subset = rng.sample(findings, rng.randint(1, len(findings)))

            # confusion counts: exact integer equality per finding
            by_finding = {}
            for finding in subset:
                got = confusion_counts(pred, ref, finding, policy)
                want = oracle_confusion(pred, ref, finding, unc_pos)
                assert (got.tp, got.fp, got.fn, got.tn) == want
                by_finding[finding] = want

            # micro pools counts; macro averages supported findings only
            report = f1_scores(pred, ref, subset, policy)
            tp = sum(c[0] for c in by_finding.values())
            fp = sum(c[1] for c in by_finding.values())
            fn = sum(c[2] for c in by_finding.values())
            assert report.micro_f1 == oracle_f1(tp, fp, fn)
            supported = [oracle_f1(*c[:3]) for c in by_finding.values()
                         if c[0] + c[2] > 0 or c[0] + c[1] > 0]
            macro = math.fsum(supported) / len(supported) if supported else 0.0
            assert abs(report.macro_f1 - macro) <= 1e-12

            # kappa from the 2x2 table, degenerate case checked on integers
            finding = rng.choice(subset)
            tp, fp, fn, tn = oracle_confusion(pred, ref, finding, unc_pos)
            pred_pos, ref_pos = tp + fp, tp + fn
            pe_num = pred_pos * ref_pos + (n - pred_pos) * (n - ref_pos)
            got = cohens_kappa(pred, ref, finding, policy)
            if pe_num == n * n:
                assert got is DEGENERATE
            else:
                pe = pe_num / (n * n)
                want = ((tp + tn) / n - pe) / (1.0 - pe)
                assert abs(got - want) <= 1e-12

            # AUC: rank statistic vs our own trapezoid over the curve,
            # with scores on a coarse grid so ties actually occur
            m = rng.randint(2, 200)
            labels = [rng.randint(0, 1) for _ in range(m)]
            labels[0], labels[1] = 0, 1
            scores = [rng.randint(0, 16) / 16.0 for _ in range(m)]
            result = roc_auc(scores, labels)
            area = 0.0
            for (x0, y0), (x1, y1) in zip(result.curve, result.curve[1:]):
                area += (x1 - x0) * (y1 + y0) / 2.0
            assert abs(result.auc - area) <= 1e-12
            if m <= 50:
                # small instances also get the pair-counting oracle
                pos = [s for s, y in zip(scores, labels) if y == 1]
                neg = [s for s, y in zip(scores, labels) if y == 0]
                wins = math.fsum(
                    1.0 if p > q else 0.5 if p == q else 0.0
                    for p in pos for q in neg)
                assert abs(result.auc - wins / (len(pos) * len(neg))) <= 1e-12


def test_paired_ci_reproduction():
    with criterion("paired CI (n=296, mean 0.25) lands on (0.216, 0.284) +/- 0.001"):
        diffs = exact_moments([float(i) for i in range(296)], 0.25, 0.294)
        sample = PairedSample(tuple(diffs), tuple([0.0] * 296))
        start = time.perf_counter()
        res = paired_t(sample)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        assert abs(res.ci_low - 0.216) <= 1e-3
        assert abs(res.ci_high - 0.284) <= 1e-3
        # the upper bound as printed in the source table was 0.283; stay
        # within a unit in the third decimal of that rendering as well
        assert abs(res.ci_high - 0.283) <= 1e-3
        assert res.df == 295


def test_percent_reduction_fixtures():
    with criterion("percent reduction fixtures exact at one decimal"):
        assert round(percent_reduction(147.6, 120.6), 1) == 18.3
        assert round(percent_reduction(197.6, 165.1), 1) == 16.4


def test_rm_anova_matches_squared_t():
    with criterion("two-condition RM-ANOVA F equals t^2 (500 matrices)"):
        rng = random.Random(4)
        for _ in range(500):
            n = rng.randint(3, 12)
            rows = [(rng.uniform(0, 5), rng.uniform(0, 5)) for _ in range(n)]
            anova = rm_anova(RatingMatrix.from_rows(rows))
            tres = paired_t(PairedSample(
                tuple(r[0] for r in rows), tuple(r[1] for r in rows)))
            assert anova.df_between == 1
            assert anova.df_error == n - 1
            assert abs(anova.f - tres.t ** 2) <= 1e-9
            assert abs(anova.p - tres.p) <= 1e-9


def test_kendalls_w_fixtures():
    with criterion("Kendall's W hand fixtures (1, 1/9, 0) exact"):
        assert kendalls_w(RatingMatrix.from_rows(
            [(1, 2, 3), (1, 2, 3), (1, 2, 3)])) == 1.0
        w = kendalls_w(RatingMatrix.from_rows(
            [(1, 2, 3), (3, 2, 1), (1, 2, 3)]))
        assert abs(w - 1 / 9) <= 1e-12
        assert round(w, 3) == 0.111
        assert kendalls_w(RatingMatrix.from_rows(
            [(1, 2, 3), (3, 2, 1)])) == 0.0


def test_labeler_regression_corpus():
    with criterion("labeler agrees 100% with the frozen hand-labeled corpus"):
        lexicon = load_lexicon()
        records = []
        with open(DATA_DIR / "labeler_regression.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    records.append(json.loads(line))
        # the corpus was written down before the labeler existed; it must
        # stay at least 50 sentences strong and agree exactly
        assert sum(r["n_sentences"] for r in records) >= 50
        for rec in records:
            want = LabelVector.from_dict(
                rec["expected"], fill=AssertionLabel.NOT_MENTIONED)
            got = label_report(rec["text"], lexicon)
            assert got == want, rec["report_id"]
            # determinism and case-invariance on every record
            assert label_report(rec["text"], lexicon) == got
            assert label_report(rec["text"].upper(), lexicon) == got
            assert label_report(rec["text"].lower(), lexicon) == got


def test_radgraph_fixtures_and_symmetry():
    with criterion("RadGraph identity, partial fixture, and 200-pair symmetry"):
        g = ReportGraph(
            (Entity("e1", "effusion", "observation-present"),
             Entity("e2", "right lung", "anatomy")),
            (Relation("e1", "e2", "located-at"),),
        )
        score = radgraph_f1(g, g)
        assert (score.entity_f1, score.relation_f1, score.combined) == (1.0, 1.0, 1.0)

        cand = ReportGraph(
            (Entity("c1", "effusion", "observation-present"),
             Entity("c2", "right", "anatomy"),
             Entity("c3", "edema", "observation-present")),
            (Relation("c1", "c2", "located-at"),),
        )
        ref = ReportGraph(
            (Entity("r1", "effusion", "observation-present"),
             Entity("r2", "right", "anatomy")),
            (Relation("r1", "r2", "located-at"), Relation("r2", "r1", "modify")),
        )
        score = radgraph_f1(cand, ref)
        # entities 2 matched of 3 vs 2; relations 1 matched of 1 vs 2
        assert abs(score.entity_f1 - 2 * (2 / 3) * 1.0 / ((2 / 3) + 1.0)) <= 1e-12
        assert abs(score.relation_f1 - 2 * 1.0 * 0.5 / 1.5) <= 1e-12
        assert abs(score.combined - (score.entity_f1 + score.relation_f1) / 2) <= 1e-12

        rng = random.Random(11)
        surfaces = ["effusion", "opacity", "right lung", "heart", "tube"]

        def rand_graph():
            n = rng.randint(0, 6)
            entities = [Entity(f"e{i}", rng.choice(surfaces), rng.choice(ENTITY_TYPES))
                        for i in range(n)]
            relations = []
            if n >= 2:
                for _ in range(rng.randint(0, 4)):
                    head, tail = rng.sample(range(n), 2)
                    relations.append(Relation(
                        f"e{head}", f"e{tail}",
                        rng.choice(("modify", "located-at", "suggestive-of"))))
            return ReportGraph(tuple(entities), tuple(dict.fromkeys(relations)))

        for _ in range(200):
            a, b = rand_graph(), rand_graph()
            ab, ba = radgraph_f1(a, b), radgraph_f1(b, a)
            assert ab.entity_f1 == ba.entity_f1
            assert ab.relation_f1 == ba.relation_f1
            assert ab.combined == ba.combined


def test_trial_simulation_end_to_end(tmp_path):
    with criterion("seeded 296-case trial: 18.3% +/- 1, p<0.001, 148/148, replay"):
        outdir = tmp_path / "trial"
        start = time.perf_counter()
        result = simulate_study(SimulationConfig(), outdir=outdir)
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        times = result["stats"]["reading_time_s"]
        assert abs(times["reduction_percent"] - 18.3) <= 1.0
        assert times["paired_t"]["p"] < 0.001
        assert result["allocation_counts"] == {AI: 148, STD: 148}
        replayed = StudyEngine.from_event_log(outdir / "events.jsonl")
        assert replayed.state_digest() == result["state_digest"]


def test_concealment_and_blinding():
    with criterion("sealed arms stay concealed; evaluation payloads carry no provenance"):
        clock = SimClock()
        engine = StudyEngine(clock=clock, model_client=LocalTemplateModel())
        client = TestClient(create_app(engine))
        assert client.post("/studies", json={"study_id": "s1"}).status_code == 201
        client.post("/studies/s1/allocation", json={"seed": 11, "n": 8, "block_size": 4})
        readers = {}
        for i in range(4):
            body = client.post("/studies/s1/readers",
                               json={"reader_id": f"reader-{i}"}).json()
            readers.setdefault(body["arm"], body["reader_id"])
        for k in range(2):
            case_id = f"case-{k}"
            client.post("/studies/s1/cases",
                        json={"case_id": case_id, "image_refs": ["img"]})
            for arm, seconds in ((AI, 120.0), (STD, 150.0)):
                session = client.post("/studies/s1/sessions", json={
                    "case_id": case_id, "reader_id": readers[arm]}).json()["session_id"]
                if arm == AI:
                    client.post(f"/studies/s1/sessions/{session}/draft")
                clock.advance(seconds)
                client.post(f"/studies/s1/sessions/{session}/finalize",
                            json={"final_text": f"Impression {case_id} {arm}."})
            client.post(f"/studies/s1/cases/{case_id}/review",
                        json={"reviewer_id": "senior-1", "base_arm": AI})

        # four envelopes were opened for reader assignment; the rest of the
        # allocation list must stay sealed and refuse direct arm queries
        rows = client.get("/studies/s1/allocations").json()["allocations"]
        sealed = [row for row in rows if row["sealed"]]
        assert sealed, "expected sealed envelopes"
        assert all("arm" not in row for row in sealed)
        index = sealed[0]["sequence_index"]
        assert client.get(f"/studies/s1/allocations/{index}/arm").status_code == 403

        # every instrument's batch, as served over the wire, scans clean
        for seed, instrument in enumerate(Instrument, start=1):
            resp = client.post("/studies/s1/evaluation/batches",
                               json={"instrument": instrument.value, "seed": seed})
            assert resp.status_code == 201
            batch = resp.json()
            assert batch["items"], instrument.value
            assert scan_for_provenance(batch) == []
            assert "key" not in json.dumps(batch)


def test_quality_figures_format_only():
    with criterion("reference model-quality figures render as format fixtures only"):
        # these published figures need a trained report generator and
        # private image data to recompute; at desk scale the only contract
        # is that the renderer would print them in the expected shape
        assert format_score(0.634) == "63.4"
        assert format_score(0.258) == "25.8"
        assert format_score(0.586) == "58.6"
        assert format_probability(0.931) == "0.931"
