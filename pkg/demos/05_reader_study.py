"""Drive the reader-study engine end to end, in process.

Covers sealed allocation, timed reading sessions with an AI draft in one
arm, senior release, a blinded evaluation batch, export, and replay.
Run with: python demos/05_reader_study.py
"""

import json

from cxrstudy.corpus import Arm
from cxrstudy.evaluation import scan_for_provenance
from cxrstudy.orchestrator.clock import SimClock
from cxrstudy.orchestrator.engine import StudyEngine
from cxrstudy.orchestrator.events import EventLog
from cxrstudy.orchestrator.modelclient import LocalTemplateModel

AI = Arm.AI_ASSISTED.value
STD = Arm.STANDARD_CARE.value

clock = SimClock()
engine = StudyEngine(clock=clock, model_client=LocalTemplateModel(),
                     event_log=EventLog())

engine.create_study("demo")
engine.generate_allocation("demo", seed=11, n=8, block_size=4)
print("allocation generated:", engine.allocation_counts("demo"))

# readers open sealed envelopes in sequence; nobody sees an arm before
# their own envelope opens
readers = {}
for i in range(4):
    arm = engine.assign_reader("demo", f"reader-{i}")
    readers.setdefault(arm, f"reader-{i}")
    print(f"  reader-{i} -> {arm}")
sealed = [row for row in engine.allocation_view("demo") if row["sealed"]]
print("envelopes still sealed:", len(sealed))
print()

# one case, read once per arm; the assisted reader requests a draft
engine.register_case("demo", "case-1", image_refs=("img-001.dcm",),
                     history_note="dyspnea")

session = engine.start_session("demo", "case-1", readers[AI])
draft = engine.request_ai_draft("demo", session["session_id"])
print("AI draft for the assisted arm (model", draft.model_version + "):")
print("  ", draft.report_text.splitlines()[0])
clock.advance(96.0)
engine.finalize_session("demo", session["session_id"],
                        "Impression: small right effusion, lines in place.")

session = engine.start_session("demo", "case-1", readers[STD])
clock.advance(141.0)
engine.finalize_session("demo", session["session_id"],
                        "Impression: small right pleural effusion.")
print("both arms finalized; reading times 96 s and 141 s")
print()

# the senior reviewer releases the juniors' work as the published report
released = engine.senior_review("demo", "case-1", reviewer_id="senior-1",
                                base_arm=AI)
print("released report:", released["report_id"],
      "as", released["author_role"])
print()

# evaluation raters see the blinded batch only; scan it to prove no
# provenance leaks through
batch = engine.build_evaluation_batch("demo", "likert_quality", seed=3)
view = engine.batch_view("demo", batch["batch_id"])
print("blinded batch:", view["batch_id"], "with", len(view["items"]), "items")
assert scan_for_provenance(view) == []
assert "key" not in json.dumps(view)
print("provenance scan: clean")
for score, item in enumerate(view["items"], start=4):
    engine.record_evaluation("demo", view["batch_id"], item["item_id"],
                             rater_id="rater-1", response=score)
print()

# export joins the votes back to the sealed key for analysis
export = engine.export_study("demo")
row = export["rows"][0]
print("export row for case-1:")
print("  reading time assisted:", row["reading_time_s"][AI])
print("  reading time standard:", row["reading_time_s"][STD])
print("  quality scores by source:", row["quality_scores"])
print()

# the event log is the source of truth: replaying it reproduces the
# engine state bit for bit
replayed = StudyEngine.replay(engine.log.events())
print("replay digest matches:",
      replayed.state_digest() == engine.state_digest())
print()
print("for the full-size seeded trial, run: cxrstudy simulate --out out/")
