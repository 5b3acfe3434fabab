"""Trial statistics: paired t, repeated-measures ANOVA, Kendall's W,
power analysis, percent reduction, preference tallies, and mean±SD
summaries.

All distribution math comes from :mod:`cxrstudy.distributions`; nothing
here depends on scipy.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .distributions import f_sf, normal_ppf, t_cdf, t_ppf

__all__ = [
    "PairedSample",
    "PairedTResult",
    "RatingMatrix",
    "AnovaResult",
    "SummaryStat",
    "PreferenceSummary",
    "paired_t",
    "rm_anova",
    "kendalls_w",
    "power_paired_n",
    "percent_reduction",
    "preference_majority",
    "summarize",
]


@dataclass(frozen=True)
class PairedSample:
    """Two equal-length per-case value lists, paired by index."""

    values_a: tuple[float, ...]
    values_b: tuple[float, ...]
    label_a: str = "a"
    label_b: str = "b"

    def __post_init__(self) -> None:
        if len(self.values_a) != len(self.values_b):
            raise ValueError(
                f"paired sample lengths differ: {len(self.values_a)} vs {len(self.values_b)}"
            )
        if len(self.values_a) < 2:
            raise ValueError("paired sample needs n >= 2")

    @staticmethod
    def from_lists(a: Sequence[float], b: Sequence[float],
                   label_a: str = "a", label_b: str = "b") -> "PairedSample":
        return PairedSample(tuple(float(x) for x in a),
                            tuple(float(x) for x in b), label_a, label_b)

    @property
    def n(self) -> int:
        return len(self.values_a)

    def differences(self) -> tuple[float, ...]:
        return tuple(x - y for x, y in zip(self.values_a, self.values_b))


@dataclass(frozen=True)
class PairedTResult:
    mean_diff: float
    sd_diff: float
    se: float
    t: Optional[float]  # None when the difference variance is zero
    df: int
    p: float
    ci_low: float
    ci_high: float
    alpha: float

    @property
    def degenerate(self) -> bool:
        return self.t is None


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _sample_sd(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    m = _mean(values)
    ss = math.fsum((v - m) ** 2 for v in values)
    return math.sqrt(ss / (n - 1))


def paired_t(sample: PairedSample, alpha: float = 0.05) -> PairedTResult:
    """Two-sided paired t-test with a t-distribution confidence interval.

    The interval is mean_diff ± t_{alpha/2, n-1} * SE. A zero-variance
    difference vector yields a degenerate result: t is None, p is 1 when
    the mean difference is zero and 0 otherwise, and the interval
    collapses to the point estimate.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    diffs = sample.differences()
    n = len(diffs)
    df = n - 1
    mean_diff = _mean(diffs)
    sd_diff = _sample_sd(diffs)

    if sd_diff == 0.0:
        p = 1.0 if mean_diff == 0.0 else 0.0
        return PairedTResult(mean_diff, 0.0, 0.0, None, df, p,
                             mean_diff, mean_diff, alpha)

    se = sd_diff / math.sqrt(n)
    t = mean_diff / se
    p = 2.0 * t_cdf(-abs(t), df)
    tcrit = t_ppf(1.0 - alpha / 2.0, df)
    half = tcrit * se
    return PairedTResult(mean_diff, sd_diff, se, t, df, p,
                         mean_diff - half, mean_diff + half, alpha)


@dataclass(frozen=True)
class RatingMatrix:
    """Complete rectangular score matrix.

    For :func:`kendalls_w` rows are raters and columns are items. For
    :func:`rm_anova` rows are subjects and columns are conditions.
    """

    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.rows) < 2:
            raise ValueError("matrix needs at least 2 rows")
        width = len(self.rows[0])
        if width < 2:
            raise ValueError("matrix needs at least 2 columns")
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")

    @staticmethod
    def from_rows(rows: Sequence[Sequence[float]]) -> "RatingMatrix":
        return RatingMatrix(tuple(tuple(float(c) for c in row) for row in rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    def column(self, j: int) -> tuple[float, ...]:
        return tuple(row[j] for row in self.rows)


@dataclass(frozen=True)
class AnovaResult:
    f: Optional[float]  # None when the error variance is zero
    df_between: int
    df_error: int
    p: Optional[float]

    @property
    def degenerate(self) -> bool:
        return self.f is None


def rm_anova(matrix: RatingMatrix) -> AnovaResult:
    """One-way repeated-measures ANOVA (rows = subjects, cols = conditions)."""
    n = matrix.n_rows
    k = matrix.n_cols
    grand = _mean([c for row in matrix.rows for c in row])

    subj_means = [_mean(row) for row in matrix.rows]
    cond_means = [_mean(matrix.column(j)) for j in range(k)]

    ss_total = math.fsum((c - grand) ** 2 for row in matrix.rows for c in row)
    ss_subjects = k * math.fsum((m - grand) ** 2 for m in subj_means)
    ss_conditions = n * math.fsum((m - grand) ** 2 for m in cond_means)
    ss_error = ss_total - ss_subjects - ss_conditions

    df_between = k - 1
    df_error = (k - 1) * (n - 1)
    ms_between = ss_conditions / df_between
    ms_error = ss_error / df_error

    if ms_error <= 0.0:
        # Exact agreement between conditions after removing subject effects.
        return AnovaResult(None, df_between, df_error, None)

    f = ms_between / ms_error
    return AnovaResult(f, df_between, df_error, f_sf(f, df_between, df_error))


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


def kendalls_w(matrix: RatingMatrix) -> float:
    """Kendall's coefficient of concordance with midrank tie correction.

    W = 12 S / (m^2 (n^3 - n) - m T), where S is the sum of squared
    deviations of the item rank sums from their mean and T is the tie
    correction summed over raters.
    """
    m = matrix.n_rows
    n = matrix.n_cols

    rank_sums = [0.0] * n
    tie_term = 0.0
    for row in matrix.rows:
        ranks = _midranks(row)
        for j, r in enumerate(ranks):
            rank_sums[j] += r
        counts = Counter(row)
        tie_term += sum(t ** 3 - t for t in counts.values())

    mean_sum = _mean(rank_sums)
    s = math.fsum((r - mean_sum) ** 2 for r in rank_sums)
    denom = m * m * (n ** 3 - n) - m * tie_term
    if denom <= 0.0:
        raise ValueError("degenerate rating matrix: every rater ties all items")
    w = 12.0 * s / denom
    # Clamp tiny float overshoot.
    return min(max(w, 0.0), 1.0)


def power_paired_n(effect_dz: float, alpha: float, power: float) -> int:
    """Smallest paired-test sample size reaching the target power.

    Starts from the two-sided normal approximation
    n = ((z_{1-alpha/2} + z_{power}) / dz)^2 and then replaces the normal
    quantiles with t quantiles at df = n - 1 until the result is stable.
    """
    if effect_dz <= 0.0:
        raise ValueError("effect size must be positive")
    if not 0.0 < alpha < 1.0 or not 0.0 < power < 1.0:
        raise ValueError("alpha and power must be in (0, 1)")

    z_a = normal_ppf(1.0 - alpha / 2.0)
    z_b = normal_ppf(power)
    n = max(2, math.ceil(((z_a + z_b) / effect_dz) ** 2))

    for _ in range(100):
        df = n - 1
        t_a = t_ppf(1.0 - alpha / 2.0, df)
        t_b = t_ppf(power, df)
        n_next = max(2, math.ceil(((t_a + t_b) / effect_dz) ** 2))
        if n_next == n:
            return n
        n = n_next
    return n


def percent_reduction(baseline: float, treated: float) -> float:
    """Percent reduction from baseline, 100 * (baseline - treated) / baseline."""
    if baseline <= 0.0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return 100.0 * (baseline - treated) / baseline


@dataclass(frozen=True)
class PreferenceSummary:
    per_case_winner: tuple[Optional[str], ...]
    proportions: dict[str, float]
    n_cases: int
    threshold: int


def preference_majority(votes: Sequence[Sequence[str]], threshold: int = 3) -> PreferenceSummary:
    """Majority tally for forced-choice preference votes.

    Each inner list holds one case's rater choices (no abstentions). A case
    counts for an option iff at least ``threshold`` raters chose it; the
    summary reports the fraction of cases won by each observed option.
    """
    if not votes:
        raise ValueError("no cases given")
    width = len(votes[0])
    if width == 0:
        raise ValueError("cases must have at least one vote")
    options: set[str] = set()
    winners: list[Optional[str]] = []
    for i, case in enumerate(votes):
        if len(case) != width:
            raise ValueError(f"case {i} has {len(case)} votes, expected {width}")
        for v in case:
            if v is None or v == "":
                raise ValueError(f"abstention in case {i}; forced choice required")
        tally = Counter(case)
        options.update(tally)
        winner = None
        for opt, count in tally.items():
            if count >= threshold:
                winner = opt
                break
        winners.append(winner)

    n = len(votes)
    proportions = {
        opt: sum(1 for w in winners if w == opt) / n for opt in sorted(options)
    }
    return PreferenceSummary(tuple(winners), proportions, n, threshold)


@dataclass(frozen=True)
class SummaryStat:
    mean: float
    sd: float
    n: int

    def render(self) -> str:
        return f"{self.mean:.2f}±{self.sd:.2f}"


def summarize(values: Sequence[float]) -> SummaryStat:
    """Mean and sample SD (n-1 denominator); renders as "m±s"."""
    if len(values) == 0:
        raise ValueError("cannot summarize an empty list")
    return SummaryStat(_mean(values), _sample_sd(values), len(values))
