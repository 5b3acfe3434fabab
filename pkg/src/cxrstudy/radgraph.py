"""Entity-relation report graphs and RadGraph-style F1 scoring.

Graphs arrive as annotation records; this module only matches and scores
them. Entity matching is exact on normalized surface text plus entity
type, greedy in reference order; a relation matches when both endpoints
matched each other and the relation type agrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "ENTITY_TYPES",
    "RELATION_TYPES",
    "Entity",
    "Relation",
    "ReportGraph",
    "GraphMatching",
    "RadGraphScore",
    "match_graph",
    "radgraph_f1",
    "corpus_radgraph_f1",
    "parse_graph_file",
]

ENTITY_TYPES = (
    "anatomy",
    "observation-present",
    "observation-absent",
    "observation-uncertain",
)
RELATION_TYPES = ("modify", "located-at", "suggestive-of")


@dataclass(frozen=True)
class Entity:
    entity_id: str
    surface_text: str
    entity_type: str

    def __post_init__(self) -> None:
        if self.entity_type not in ENTITY_TYPES:
            raise ValueError(f"unknown entity_type {self.entity_type!r}")


@dataclass(frozen=True)
class Relation:
    head: str
    tail: str
    relation_type: str

    def __post_init__(self) -> None:
        if self.relation_type not in RELATION_TYPES:
            raise ValueError(f"unknown relation_type {self.relation_type!r}")


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class ReportGraph:
    entities: tuple[Entity, ...]
    relations: tuple[Relation, ...]

    def __post_init__(self) -> None:
        ids = [e.entity_id for e in self.entities]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate entity_id in graph")
        known = set(ids)
        for rel in self.relations:
            if rel.head not in known or rel.tail not in known:
                raise ValueError(f"relation endpoint missing: {rel.head!r} -> {rel.tail!r}")
            if rel.head == rel.tail:
                raise ValueError(f"self-relation on {rel.head!r}")

    @property
    def is_empty(self) -> bool:
        return not self.entities and not self.relations

    def entity(self, entity_id: str) -> Entity:
        for e in self.entities:
            if e.entity_id == entity_id:
                return e
        raise KeyError(entity_id)

    @staticmethod
    def from_dict(rec: dict) -> "ReportGraph":
        entities = tuple(
            Entity(str(e["entity_id"]), str(e["surface_text"]), str(e["entity_type"]))
            for e in rec.get("entities", [])
        )
        relations = tuple(
            Relation(str(r["head"]), str(r["tail"]), str(r["relation_type"]))
            for r in rec.get("relations", [])
        )
        return ReportGraph(entities, relations)


@dataclass(frozen=True)
class GraphMatching:
    """Pairs of matched ids/indices, candidate side first."""

    entity_pairs: tuple[tuple[str, str], ...]
    relation_pairs: tuple[tuple[int, int], ...]


def match_graph(candidate: ReportGraph, reference: ReportGraph) -> GraphMatching:
    """Greedy matching in reference order.

    Each reference entity takes the first unused candidate entity with the
    same normalized surface text and type, so the i-th occurrence of a key
    on one side pairs with the i-th occurrence on the other; the match
    counts are therefore symmetric in the two arguments.
    """
    used_cand: set[str] = set()
    entity_pairs: list[tuple[str, str]] = []
    cand_to_ref: dict[str, str] = {}
    for ref_ent in reference.entities:
        key = (_normalize(ref_ent.surface_text), ref_ent.entity_type)
        for cand_ent in candidate.entities:
            if cand_ent.entity_id in used_cand:
                continue
            if (_normalize(cand_ent.surface_text), cand_ent.entity_type) == key:
                used_cand.add(cand_ent.entity_id)
                entity_pairs.append((cand_ent.entity_id, ref_ent.entity_id))
                cand_to_ref[cand_ent.entity_id] = ref_ent.entity_id
                break

    used_rel: set[int] = set()
    relation_pairs: list[tuple[int, int]] = []
    for j, ref_rel in enumerate(reference.relations):
        for i, cand_rel in enumerate(candidate.relations):
            if i in used_rel:
                continue
            if cand_rel.relation_type != ref_rel.relation_type:
                continue
            if (cand_to_ref.get(cand_rel.head) == ref_rel.head
                    and cand_to_ref.get(cand_rel.tail) == ref_rel.tail):
                used_rel.add(i)
                relation_pairs.append((i, j))
                break
    return GraphMatching(tuple(entity_pairs), tuple(relation_pairs))


@dataclass(frozen=True)
class RadGraphScore:
    entity_f1: float
    relation_f1: float
    combined: float


def _f1_from_counts(matches: int, n_candidate: int, n_reference: int) -> float:
    if n_candidate == 0 and n_reference == 0:
        return 1.0
    if matches == 0:
        return 0.0
    precision = matches / n_candidate
    recall = matches / n_reference
    return 2.0 * precision * recall / (precision + recall)


def radgraph_f1(candidate: ReportGraph, reference: ReportGraph) -> RadGraphScore:
    """Entity F1, relation F1, and their mean for one report pair.

    Two fully empty graphs agree vacuously (all components 1); an empty
    graph against a nonempty one scores 0 on every component.
    """
    if candidate.is_empty and reference.is_empty:
        return RadGraphScore(1.0, 1.0, 1.0)
    if candidate.is_empty or reference.is_empty:
        return RadGraphScore(0.0, 0.0, 0.0)

    matching = match_graph(candidate, reference)
    entity_f1 = _f1_from_counts(len(matching.entity_pairs),
                                len(candidate.entities), len(reference.entities))
    relation_f1 = _f1_from_counts(len(matching.relation_pairs),
                                  len(candidate.relations), len(reference.relations))
    return RadGraphScore(entity_f1, relation_f1, (entity_f1 + relation_f1) / 2.0)


def corpus_radgraph_f1(pairs: Iterable[tuple[ReportGraph, ReportGraph]]) -> float:
    """Corpus score: mean of per-report combined F1, scaled to 0-100."""
    combined = [radgraph_f1(c, r).combined for c, r in pairs]
    if not combined:
        raise ValueError("no graph pairs to score")
    return 100.0 * math.fsum(combined) / len(combined)


def parse_graph_file(path: str | Path) -> dict[str, ReportGraph]:
    """Read a jsonl annotation file into report_id -> ReportGraph."""
    graphs: dict[str, ReportGraph] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                report_id = str(rec["report_id"])
                graph = ReportGraph.from_dict(rec)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad graph record: {exc}") from exc
            if report_id in graphs:
                raise ValueError(f"{path}:{lineno}: duplicate report_id {report_id!r}")
            graphs[report_id] = graph
    return graphs
