"""Batch command-line front-end.

Subcommands: `label` (rule-based or remote labeling of a report corpus),
`score` (classification metric tables, optionally with AUC and graph
overlap), `stats` (trial statistics over a study export), `simulate`
(scripted end-to-end study), and `serve` (orchestrator HTTP API).

All outputs are written atomically and embed a reproducibility header.
Validation problems exit with status 2 before anything is written;
runtime failures (for example remote labeling errors) exit with 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Report
from .labeler import label_report, load_lexicon
from .metrics import PositivePolicy
from .radgraph import corpus_radgraph_f1, parse_graph_file
from .remote import remote_label
from .reporting import (
    render_metric_table,
    render_trial_report,
    reproducibility_header,
    score_corpora,
    trial_report,
    write_json,
    write_text,
)
from .simulate import ArmProfile, SimulationConfig, simulate_study
from .taxonomy import DEFAULT_TAXONOMY, LabelVector

ENV_LABELER_ENDPOINT = "CXRSTUDY_LABELER_ENDPOINT"
ENV_MODEL_ENDPOINT = "CXRSTUDY_MODEL_ENDPOINT"

__all__ = ["main", "build_parser", "ENV_LABELER_ENDPOINT", "ENV_MODEL_ENDPOINT"]


class CliError(Exception):
    """User/validation error; exits with status 2, nothing written."""


def _read_reports_jsonl(path: str) -> list[tuple[str, str]]:
    """Read {report_id, text} records; ids must be unique."""
    records: list[tuple[str, str]] = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                report_id = str(rec["report_id"])
                text = str(rec["text"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CliError(f"{path}:{lineno}: bad report record: {exc}") from exc
            if report_id in seen:
                raise CliError(f"{path}:{lineno}: duplicate report_id {report_id!r}")
            seen.add(report_id)
            records.append((report_id, text))
    if not records:
        raise CliError(f"{path}: no reports found")
    return records


def _read_label_file(path: str) -> dict[str, LabelVector]:
    """Accept either a `label` output file or a bare id->labels mapping."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}") from exc
    mapping = payload.get("labels", payload) if isinstance(payload, dict) else None
    if not isinstance(mapping, dict) or not mapping:
        raise CliError(f"{path}: expected a non-empty report_id->labels mapping")
    out: dict[str, LabelVector] = {}
    for report_id, labels in mapping.items():
        try:
            out[str(report_id)] = LabelVector.from_dict(labels)
        except (ValueError, TypeError, AttributeError) as exc:
            raise CliError(f"{path}: report {report_id!r}: {exc}") from exc
    return out


def _cmd_label(args: argparse.Namespace) -> int:
    records = _read_reports_jsonl(args.reports)
    endpoint = args.endpoint or os.environ.get(ENV_LABELER_ENDPOINT) or None

    if endpoint:
        reports = [Report(report_id=rid, case_id=rid, text=text,
                          image_refs=("unlinked",))
                   for rid, text in records]
        outcome = remote_label(reports, endpoint, timeout=args.timeout,
                               max_workers=args.workers)
        if outcome.errors:
            for err in outcome.errors:
                print(f"label failed: {err.report_id}: {err.reason}", file=sys.stderr)
            print(f"{len(outcome.errors)} of {len(records)} reports failed; "
                  "no output written", file=sys.stderr)
            return 1
        vectors = {rid: vec for (rid, _), vec in zip(records, outcome.vectors)}
        source = endpoint
        lexicon_version = None
    else:
        lexicon = load_lexicon(args.lexicon)
        vectors = {rid: label_report(text, lexicon) for rid, text in records}
        source = "rule-labeler"
        lexicon_version = lexicon.version

    header = reproducibility_header(
        {"command": "label", "reports": args.reports, "labeler": source,
         "lexicon_version": lexicon_version})
    write_json(args.out, {
        "header": header,
        "n_reports": len(vectors),
        "labels": {rid: vec.as_strings() for rid, vec in vectors.items()},
    })
    print(f"labeled {len(vectors)} reports -> {args.out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    ref = _read_label_file(args.ref)
    pred = _read_label_file(args.pred)
    if set(ref) != set(pred):
        missing = sorted(set(ref) ^ set(pred))[:5]
        raise CliError("reference and prediction report ids differ "
                       f"(first differences: {missing})")
    ids = sorted(ref)
    ref_vectors = [ref[i] for i in ids]
    pred_vectors = [pred[i] for i in ids]

    policy = PositivePolicy(uncertain_maps_to=args.policy.split("-", 1)[1])

    scores = None
    if args.scores:
        try:
            with open(args.scores, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read scores file: {exc}") from exc
        scores = {}
        for finding, by_report in raw.items():
            if finding not in DEFAULT_TAXONOMY.findings:
                raise CliError(f"scores file: unknown finding {finding!r}")
            try:
                scores[finding] = [float(by_report[i]) for i in ids]
            except KeyError as exc:
                raise CliError(
                    f"scores file: finding {finding!r} missing report {exc}") from exc
    elif args.auc:
        raise CliError("AUC requested (--auc) but no --scores file given")

    report = score_corpora(ref_vectors, pred_vectors, policy=policy,
                           top5=args.top5, scores=scores)

    if bool(args.ref_graphs) != bool(args.pred_graphs):
        raise CliError("graph scoring needs both --ref-graphs and --pred-graphs")
    if args.ref_graphs:
        ref_graphs = parse_graph_file(args.ref_graphs)
        pred_graphs = parse_graph_file(args.pred_graphs)
        if set(ref_graphs) != set(pred_graphs):
            raise CliError("graph files cover different report ids")
        pairs = [(pred_graphs[i], ref_graphs[i]) for i in sorted(ref_graphs)]
        report["table"].append({
            "metric": "radgraph_f1", "subset": "corpus",
            "value": round(corpus_radgraph_f1(pairs), 1),
        })

    header = reproducibility_header(
        {"command": "score", "ref": args.ref, "pred": args.pred,
         "policy": report["policy"], "top5": args.top5})
    if args.out:
        write_json(args.out, {"header": header, "report": report})
    sys.stdout.write(render_metric_table(report))
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    try:
        with open(args.export, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read export file: {exc}") from exc
    export = payload.get("export", payload)
    if "rows" not in export:
        raise CliError("export file has no rows; expected an export from "
                       "`simulate` or the orchestrator API")
    try:
        stats = trial_report(export, alpha=args.alpha)
    except (ValueError, KeyError) as exc:
        raise CliError(f"cannot compute stats: {exc}") from exc

    header = reproducibility_header(
        {"command": "stats", "export": args.export, "alpha": args.alpha})
    if args.out:
        write_json(args.out, {"header": header, "stats": stats})
    sys.stdout.write(render_trial_report(stats))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = SimulationConfig(
        seed=args.seed, n_cases=args.cases, block_size=args.block_size,
        n_readers=args.readers, n_raters=args.raters,
        ai=ArmProfile(args.ai_mean, args.ai_sd, args.ai_positive),
        standard=ArmProfile(args.standard_mean, args.standard_sd,
                            args.standard_positive),
    )
    try:
        config.validate()
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    result = simulate_study(config, outdir=args.out)
    rt = result["stats"]["reading_time_s"]
    print(f"simulated {config.n_cases} cases "
          f"({result['n_events']} events) -> {args.out}")
    print("allocation: " + ", ".join(
        f"{arm}={n}" for arm, n in sorted(result["allocation_counts"].items())))
    print(f"reading time: standard {rt['standard-care']['display']} s, "
          f"ai-assisted {rt['ai-assisted']['display']} s "
          f"(reduction {rt['reduction_percent']:.1f}%)")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .orchestrator.api import create_app
    from .orchestrator.engine import StudyEngine
    from .orchestrator.events import EventLog
    from .orchestrator.modelclient import HttpModelClient, LocalTemplateModel

    endpoint = args.model_endpoint or os.environ.get(ENV_MODEL_ENDPOINT) or None
    mock = None
    if args.mock_model:
        from .mockserver import MockModelServer
        mock = MockModelServer(latency_s=args.mock_latency).start()
        endpoint = mock.endpoint
        print(f"mock model server on {endpoint}")
    model = HttpModelClient(endpoint) if endpoint else LocalTemplateModel()
    log = EventLog(args.event_log) if args.event_log else EventLog()
    engine = StudyEngine(model_client=model, event_log=log)
    app = create_app(engine)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        if mock is not None:
            mock.stop()
        log.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cxrstudy",
        description="Chest X-ray report labeling, scoring, and reader-study tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="label a JSONL report corpus")
    p.add_argument("reports", help="JSONL file of {report_id, text} records")
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--endpoint", default=None,
                   help=f"remote labeler endpoint (default: ${ENV_LABELER_ENDPOINT} "
                        "or the in-package rule labeler)")
    p.add_argument("--lexicon", default=None, help="alternate lexicon file")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--workers", type=int, default=8)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("score", help="score predictions against a reference")
    p.add_argument("--ref", required=True, help="reference label file")
    p.add_argument("--pred", required=True, help="prediction label file")
    p.add_argument("--scores", default=None,
                   help="JSON {finding: {report_id: probability}} for AUC")
    p.add_argument("--auc", action="store_true",
                   help="require AUC output (errors without --scores)")
    p.add_argument("--ref-graphs", default=None, help="reference graph JSONL")
    p.add_argument("--pred-graphs", default=None, help="prediction graph JSONL")
    p.add_argument("--policy", choices=("uncertain-positive", "uncertain-negative"),
                   default="uncertain-positive")
    p.add_argument("--top5", choices=("clinical", "mimic"), default="clinical")
    p.add_argument("--out", default=None, help="also write the table as JSON")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("stats", help="trial statistics over a study export")
    p.add_argument("export", help="export JSON (from `simulate` or the API)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None, help="also write stats as JSON")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("simulate", help="run the scripted end-to-end study")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--cases", type=int, default=296)
    p.add_argument("--block-size", type=int, default=4)
    p.add_argument("--readers", type=int, default=20)
    p.add_argument("--raters", type=int, default=5)
    p.add_argument("--ai-mean", type=float, default=120.6)
    p.add_argument("--ai-sd", type=float, default=45.6)
    p.add_argument("--ai-positive", type=int, default=155)
    p.add_argument("--standard-mean", type=float, default=147.6)
    p.add_argument("--standard-sd", type=float, default=51.1)
    p.add_argument("--standard-positive", type=int, default=107)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("serve", help="start the orchestrator HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--event-log", default=None, help="persist events to this file")
    p.add_argument("--model-endpoint", default=None,
                   help=f"model service URL (default: ${ENV_MODEL_ENDPOINT} "
                        "or the in-process template model)")
    p.add_argument("--mock-model", action="store_true",
                   help="spawn the in-repo mock model server and use it")
    p.add_argument("--mock-latency", type=float, default=0.0)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
