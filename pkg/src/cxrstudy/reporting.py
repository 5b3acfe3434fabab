"""Report rendering and artifact output.

Two consumers: the `score` subcommand (metric tables over labeled
corpora) and the `stats`/`simulate` subcommands (trial summary in the
style of a baseline-characteristics table). All file writers are atomic
and embed a reproducibility header with config, seed, and component
versions. Outputs carry no wall-clock timestamps, so a fixed seed gives
byte-identical files across runs.
"""

from __future__ import annotations

import json
import os
import platform
import tempfile
from typing import Mapping, Optional, Sequence

from . import __version__
from .metrics import (
    DEFAULT_POLICY,
    DEGENERATE,
    PositivePolicy,
    cohens_kappa,
    f1_scores,
    roc_auc,
)
from .orchestrator.events import EVENT_LOG_VERSION
from .stats import PairedSample, RatingMatrix, kendalls_w, paired_t, percent_reduction, summarize
from .taxonomy import DEFAULT_TAXONOMY, FindingTaxonomy, LabelVector

__all__ = [
    "format_score",
    "format_probability",
    "reproducibility_header",
    "write_json",
    "write_text",
    "score_corpora",
    "render_metric_table",
    "trial_report",
    "render_trial_report",
]


def format_score(value: Optional[float]) -> str:
    """Fraction -> percent with one decimal: 0.634 -> '63.4'."""
    if value is None:
        return "n/a"
    return f"{value * 100.0:.1f}"


def format_probability(value: Optional[float]) -> str:
    """Raw probability with three decimals: 0.931 -> '0.931'."""
    if value is None:
        return "n/a"
    return f"{value:.3f}"


def reproducibility_header(config: Mapping[str, object],
                           seed: Optional[int] = None) -> dict:
    """Metadata block embedded in every output file.

    Deliberately excludes timestamps and hostnames: the header must not
    break byte-for-byte reproducibility of seeded runs.
    """
    return {
        "config": {str(k): config[k] for k in sorted(config)},
        "seed": seed,
        "versions": {
            "cxrstudy": __version__,
            "event_log": EVENT_LOG_VERSION,
            "python": platform.python_version(),
        },
    }


def _atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so a failed run never
    leaves a partial output at the destination."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_json(path: str, payload: object) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(path, text.encode("utf-8"))


def write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def score_corpora(ref: Sequence[LabelVector], pred: Sequence[LabelVector],
                  policy: PositivePolicy = DEFAULT_POLICY,
                  taxonomy: FindingTaxonomy = DEFAULT_TAXONOMY,
                  top5: str = "clinical",
                  scores: Optional[Mapping[str, Sequence[float]]] = None,
                  lexicon_version: Optional[int] = None) -> dict:
    """Assemble the metric table for a prediction/reference corpus pair.

    ``scores`` optionally maps finding name -> per-report probabilities
    (aligned with ``ref``) and adds an AUC column for those findings.
    Values in the table are x100 with one decimal, except AUC which stays
    a raw probability.
    """
    if top5 == "clinical":
        subset5 = taxonomy.top5_clinical
    elif top5 == "mimic":
        subset5 = taxonomy.top5_mimic
    else:
        raise ValueError(f"unknown top-5 subset {top5!r}")

    all14 = f1_scores(pred, ref, taxonomy.findings, policy)
    f5 = f1_scores(pred, ref, subset5, policy)

    per_finding = {}
    for finding in taxonomy.findings:
        kappa = cohens_kappa(pred, ref, finding, policy)
        entry = {
            "f1": round(all14.per_finding_f1[finding] * 100.0, 1),
            "kappa": None if kappa is DEGENERATE else round(kappa, 3),
        }
        if scores is not None and finding in scores:
            values = scores[finding]
            if len(values) != len(ref):
                raise ValueError(
                    f"scores for {finding!r} have length {len(values)}, "
                    f"expected {len(ref)}")
            labels = [policy.binarize(vec[finding]) for vec in ref]
            entry["auc"] = round(roc_auc(values, labels).auc, 3)
        per_finding[finding] = entry

    table = [
        {"metric": "micro_f1", "subset": "all-14", "value": round(all14.micro_f1 * 100.0, 1)},
        {"metric": "macro_f1", "subset": "all-14", "value": round(all14.macro_f1 * 100.0, 1)},
        {"metric": "micro_f1", "subset": f"top5-{top5}", "value": round(f5.micro_f1 * 100.0, 1)},
        {"metric": "macro_f1", "subset": f"top5-{top5}", "value": round(f5.macro_f1 * 100.0, 1)},
    ]
    return {
        "n_reports": len(ref),
        "policy": policy.describe(),
        "lexicon_version": lexicon_version,
        "table": table,
        "per_finding": per_finding,
        "excluded_from_macro": list(all14.excluded_findings),
    }


def render_metric_table(report: dict) -> str:
    """Plain-text rendering of a score_corpora payload."""
    lines = [
        f"n_reports: {report['n_reports']}",
        f"policy: {report['policy']}",
        "",
        f"{'metric':<12} {'subset':<16} {'value':>7}",
    ]
    for row in report["table"]:
        lines.append(f"{row['metric']:<12} {row['subset']:<16} {row['value']:>7.1f}")
    lines.append("")
    lines.append(f"{'finding':<28} {'f1':>7} {'kappa':>7} {'auc':>7}")
    for finding, entry in report["per_finding"].items():
        kappa = "n/a" if entry["kappa"] is None else f"{entry['kappa']:.3f}"
        auc = f"{entry['auc']:.3f}" if "auc" in entry else "-"
        lines.append(f"{finding:<28} {entry['f1']:>7.1f} {kappa:>7} {auc:>7}")
    if report["excluded_from_macro"]:
        lines.append("")
        lines.append("excluded from macro (no support): "
                     + ", ".join(report["excluded_from_macro"]))
    return "\n".join(lines) + "\n"


def _paired_rows(rows: Sequence[dict], field: str) -> tuple[list, list, list]:
    """Extract per-case values present in both arms, sorted by case id."""
    case_ids, ai, std = [], [], []
    for row in sorted(rows, key=lambda r: r["case_id"]):
        values = row.get(field, {})
        if "ai-assisted" in values and "standard-care" in values:
            case_ids.append(row["case_id"])
            ai.append(values["ai-assisted"])
            std.append(values["standard-care"])
    return case_ids, ai, std


def trial_report(export: dict, alpha: float = 0.05) -> dict:
    """Trial statistics from an orchestrator export.

    Reading times are compared with a paired t-test (pairing by case);
    the headline number is the percent reduction of the AI-assisted arm's
    mean over standard care. Subjective scores are summarized per source
    with Kendall's W where a complete rater x item matrix exists.
    """
    rows = export["rows"]
    case_ids, ai_times, std_times = _paired_rows(rows, "reading_time_s")
    if len(case_ids) < 2:
        raise ValueError("need at least 2 cases finalized in both arms")

    sample = PairedSample(tuple(std_times), tuple(ai_times),
                          ("standard-care", "ai-assisted"))
    test = paired_t(sample, alpha)
    std_summary = summarize(std_times)
    ai_summary = summarize(ai_times)
    reduction = percent_reduction(std_summary.mean, ai_summary.mean)

    positivity = {}
    for arm in ("ai-assisted", "standard-care"):
        flags = [row["pneumonia_positive"][arm] for row in rows
                 if arm in row.get("pneumonia_positive", {})]
        positivity[arm] = {
            "n": len(flags),
            "positive": sum(flags),
            "rate_percent": round(100.0 * sum(flags) / len(flags), 1) if flags else None,
        }

    quality = _subjective_block(rows, "quality_scores")
    agreement = _subjective_block(rows, "agreement_scores")

    votes = [row["preference_votes"] for row in rows if row.get("preference_votes")]
    preference: dict[str, object] = {"n_cases": len(votes)}
    if votes:
        tally: dict[str, int] = {}
        for case_votes in votes:
            for choice in case_votes:
                tally[choice] = tally.get(choice, 0) + 1
        preference["votes"] = dict(sorted(tally.items()))

    return {
        "n_cases_paired": len(case_ids),
        "allocation_counts": export["allocation_counts"],
        "reading_time_s": {
            "standard-care": {"mean": std_summary.mean, "sd": std_summary.sd,
                              "display": std_summary.render()},
            "ai-assisted": {"mean": ai_summary.mean, "sd": ai_summary.sd,
                            "display": ai_summary.render()},
            "reduction_percent": round(reduction, 1),
            "paired_t": {
                "t": test.t, "df": test.df, "p": test.p,
                "ci_low": test.ci_low, "ci_high": test.ci_high,
                "alpha": alpha,
            },
        },
        "pneumonia_positivity": positivity,
        "quality_scores": quality,
        "agreement_scores": agreement,
        "preference": preference,
        "lexicon_version": export.get("lexicon_version"),
    }


def _subjective_block(rows: Sequence[dict], field: str) -> dict:
    """Per-source mean+-SD and, when the rater matrix is complete and
    non-trivial, Kendall's W per source."""
    by_source: dict[str, list[list[int]]] = {}
    for row in sorted(rows, key=lambda r: r["case_id"]):
        for source, scores in sorted(row.get(field, {}).items()):
            by_source.setdefault(source, []).append(list(scores))

    block = {}
    for source, per_case in sorted(by_source.items()):
        flat = [s for case_scores in per_case for s in case_scores]
        entry: dict[str, object] = {
            "n_cases": len(per_case),
            "mean": summarize(flat).mean,
            "sd": summarize(flat).sd if len(flat) > 1 else None,
            "display": summarize(flat).render() if len(flat) > 1 else None,
        }
        widths = {len(case_scores) for case_scores in per_case}
        if len(widths) == 1 and len(per_case) >= 2:
            m = widths.pop()
            if m >= 2:
                # transpose: raters become rows, cases become items
                matrix = RatingMatrix(tuple(
                    tuple(per_case[j][i] for j in range(len(per_case)))
                    for i in range(m)))
                try:
                    entry["kendalls_w"] = round(kendalls_w(matrix), 3)
                except ValueError:
                    entry["kendalls_w"] = None
        block[source] = entry
    return block


def render_trial_report(report: dict) -> str:
    """Table-1-style plain-text summary."""
    rt = report["reading_time_s"]
    t = rt["paired_t"]
    lines = [
        f"cases paired: {report['n_cases_paired']}",
        "allocation: " + ", ".join(
            f"{arm}={n}" for arm, n in sorted(report["allocation_counts"].items())),
        "",
        "reading time (s)",
        f"  standard-care: {rt['standard-care']['display']}",
        f"  ai-assisted:   {rt['ai-assisted']['display']}",
        f"  reduction:     {rt['reduction_percent']:.1f}%",
    ]
    if t["t"] is None:
        lines.append(f"  paired t: degenerate (zero variance), p={t['p']:.4g}")
    else:
        lines.append(
            f"  paired t: t={t['t']:.3f}, df={t['df']}, {_format_p(t['p'])}, "
            f"{int(round((1 - t['alpha']) * 100))}% CI "
            f"({t['ci_low']:.3f}, {t['ci_high']:.3f})")
    lines.append("")
    lines.append("pneumonia positivity")
    for arm, entry in sorted(report["pneumonia_positivity"].items()):
        rate = "n/a" if entry["rate_percent"] is None else f"{entry['rate_percent']:.1f}%"
        lines.append(f"  {arm}: {entry['positive']}/{entry['n']} ({rate})")
    for title, field in (("quality (Likert 1-5)", "quality_scores"),
                         ("agreement (RADPEER)", "agreement_scores")):
        if report[field]:
            lines.append("")
            lines.append(title)
            for source, entry in report[field].items():
                w = entry.get("kendalls_w")
                suffix = f", W={w:.3f}" if isinstance(w, float) else ""
                lines.append(f"  {source}: {entry['display']}"
                             f" (n={entry['n_cases']}{suffix})")
    if report["preference"].get("votes"):
        lines.append("")
        lines.append("pairwise preference votes")
        for choice, n in report["preference"]["votes"].items():
            lines.append(f"  {choice}: {n}")
    return "\n".join(lines) + "\n"


def _format_p(p: float) -> str:
    if p < 0.001:
        return "p<0.001"
    return f"p={p:.4f}"
