"""Walk through the rule-based report labeler on a few free-text reports.

Run with: python demos/01_label_reports.py
"""

from cxrstudy.labeler import (
    classify_assertion,
    detect_mentions,
    label_report,
    load_lexicon,
    segment_sentences,
)
from cxrstudy.taxonomy import AssertionLabel

lexicon = load_lexicon()

report = (
    "Portable chest radiograph. Endotracheal tube in standard position. "
    "Large right pleural effusion with adjacent atelectasis. "
    "No pneumothorax. Possible mild interstitial edema. "
    "Heart size cannot be assessed."
)

print("report text:")
print(" ", report)
print()

# the labeler works sentence by sentence; each mention picks up the
# nearest assertion cue that appears before it in the same sentence
print("sentences and mentions:")
for i, sent in enumerate(segment_sentences(report)):
    mentions = detect_mentions(sent.text, lexicon, i)
    tags = ", ".join(
        f"{m.finding}[{classify_assertion(sent.text, m, lexicon).value}]"
        for m in mentions) or "-"
    print(f"  [{i}] {sent.text}")
    print(f"      -> {tags}")
print()

# the per-report vector keeps the strongest assertion per finding
vector = label_report(report, lexicon)
print("final label vector (mentioned findings only):")
for finding, label in vector.as_dict().items():
    if label is not AssertionLabel.NOT_MENTIONED:
        print(f"  {finding:28s} {label.value}")
print()

# an explicitly normal report derives the No Finding label
normal = "Lungs are clear. No effusion or pneumothorax. Normal heart size."
normal_vector = label_report(normal, lexicon)
print("normal report:", repr(normal))
print("  No Finding ->", normal_vector["No Finding"].value)
print()

# labeling is deterministic and case-insensitive by construction
assert label_report(report.upper(), lexicon) == vector
assert label_report(report, lexicon) == vector
print("upper-cased text labels identically: ok")
