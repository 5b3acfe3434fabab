"""Score a small batch of generated reports against reference reads.

Both sides go through the same rule labeler, then the finding-level
metrics compare the two label corpora. Run with:
python demos/02_score_model_output.py
"""

import random

from cxrstudy.labeler import label_report, load_lexicon
from cxrstudy.metrics import PositivePolicy, cohens_kappa, roc_auc
from cxrstudy.reporting import render_metric_table, score_corpora

lexicon = load_lexicon()

# (reference read, model output) pairs; the model misses the effusion in
# the second case and hedges the edema in the third
PAIRS = [
    ("Right pleural effusion. No pneumothorax.",
     "Right pleural effusion is present. No pneumothorax."),
    ("Small left pleural effusion with basilar atelectasis.",
     "Basilar atelectasis. No acute abnormality otherwise."),
    ("Interstitial edema and cardiomegaly.",
     "Possible interstitial edema. Cardiomegaly."),
    ("Endotracheal tube ends 4 cm above the carina. Clear lungs.",
     "Endotracheal tube in satisfactory position. Lungs are clear."),
    ("No acute cardiopulmonary process.",
     "No acute cardiopulmonary process."),
]

ref = [label_report(r, lexicon) for r, _ in PAIRS]
pred = [label_report(p, lexicon) for _, p in PAIRS]

# default policy treats uncertain mentions as positive, so the hedged
# edema still counts as a hit
report = score_corpora(ref, pred, top5="clinical")
print(render_metric_table(report))
print()

# flipping the policy turns that hedge into a miss
strict = score_corpora(ref, pred, policy=PositivePolicy(uncertain_maps_to="negative"))


def macro_14(result):
    return next(row["value"] for row in result["table"]
                if row["metric"] == "macro_f1" and row["subset"] == "all-14")


print("macro F1-14, uncertain->positive:", macro_14(report))
print("macro F1-14, uncertain->negative:", macro_14(strict))
print()

# chance-corrected agreement on a single finding
kappa = cohens_kappa(pred, ref, "Pleural Effusion")
print("Pleural Effusion kappa:", f"{kappa:.3f}")
print()

# when the model also emits a per-finding confidence, AUC comes two ways
# (rank statistic and trapezoid) that must agree internally
rng = random.Random(5)
truth = [rng.randint(0, 1) for _ in range(40)]
scores = [0.3 * y + 0.7 * rng.random() for y in truth]
roc = roc_auc(scores, truth)
print(f"toy confidence AUC: {roc.auc:.3f} over {len(roc.curve)} curve points")
