"""Statistics for a paired two-arm reading-time trial, on synthetic data.

Run with: python demos/04_trial_stats.py
"""

import random

from cxrstudy.stats import (
    PairedSample,
    RatingMatrix,
    kendalls_w,
    paired_t,
    percent_reduction,
    power_paired_n,
    preference_majority,
    rm_anova,
    summarize,
)

rng = random.Random(12)

# each case is read once per arm; draw per-case times around the arm
# means with a shared case difficulty term so the pairing matters
n = 60
difficulty = [rng.gauss(0.0, 30.0) for _ in range(n)]
assisted = [max(20.0, 120.0 + d + rng.gauss(0.0, 25.0)) for d in difficulty]
standard = [max(20.0, 148.0 + d + rng.gauss(0.0, 25.0)) for d in difficulty]

a, s = summarize(assisted), summarize(standard)
print(f"assisted arm:  {a.render()} s  (n={a.n})")
print(f"standard arm:  {s.render()} s  (n={s.n})")
print(f"reduction:     {percent_reduction(s.mean, a.mean):.1f}%")
print()

sample = PairedSample(tuple(standard), tuple(assisted),
                      label_a="standard", label_b="assisted")
res = paired_t(sample)
print(f"paired t({res.df}) = {res.t:.2f}, p = {res.p:.2e}")
print(f"mean saving {res.mean_diff:.1f} s, 95% CI ({res.ci_low:.1f}, {res.ci_high:.1f})")
print()

# the same two columns through repeated-measures ANOVA: with two
# conditions F is exactly t squared
anova = rm_anova(RatingMatrix.from_rows(list(zip(standard, assisted))))
print(f"RM-ANOVA F(1, {anova.df_error}) = {anova.f:.2f}  (t^2 = {res.t ** 2:.2f})")
print()

# how many pairs would a fresh trial need to see a small effect?
print("pairs needed for dz=0.2 at alpha 0.05, power 0.90:",
      power_paired_n(0.2, 0.05, 0.90))
print()

# five raters rank three report styles; Kendall's W asks how much the
# rankings agree (1 = identical orderings, 0 = no agreement)
rankings = RatingMatrix.from_rows([
    (1, 2, 3),
    (1, 2, 3),
    (1, 3, 2),
    (2, 1, 3),
    (1, 2, 3),
])
print(f"Kendall's W over 5 raters: {kendalls_w(rankings):.3f}")
print()

# blinded side-by-side preference votes, majority of 5 per case
votes = [
    ["first", "first", "second", "first", "first"],
    ["second", "second", "second", "first", "second"],
    ["first", "second", "first", "second", "first"],
]
pref = preference_majority(votes)
print("majority preference per case:", list(pref.per_case_winner))
print("overall proportions:", pref.proportions)
