"""Entity/relation graph comparison between two report annotations.

Run with: python demos/03_graph_match.py
"""

from cxrstudy.radgraph import (
    Entity,
    Relation,
    ReportGraph,
    corpus_radgraph_f1,
    match_graph,
    radgraph_f1,
)

# candidate annotation: three entities, one located-at relation
candidate = ReportGraph(
    entities=(
        Entity("c1", "pleural effusion", "observation-present"),
        Entity("c2", "right", "anatomy"),
        Entity("c3", "edema", "observation-uncertain"),
    ),
    relations=(Relation("c1", "c2", "located-at"),),
)

# reference annotation: two entities, two relations
reference = ReportGraph(
    entities=(
        Entity("r1", "Pleural effusion", "observation-present"),
        Entity("r2", "right", "anatomy"),
    ),
    relations=(
        Relation("r1", "r2", "located-at"),
        Relation("r2", "r1", "modify"),
    ),
)

# matching pairs entities by normalized surface text plus type, then a
# relation matches only when both endpoints matched and the type agrees
matching = match_graph(candidate, reference)
print("matched entities:")
for cand_id, ref_id in matching.entity_pairs:
    print(f"  {cand_id} <-> {ref_id}")
print("matched relations:")
for ci, ri in matching.relation_pairs:
    crel = candidate.relations[ci]
    rrel = reference.relations[ri]
    print(f"  {crel.head} -{crel.relation_type}-> {crel.tail}"
          f"  <->  {rrel.head} -{rrel.relation_type}-> {rrel.tail}")
print()

score = radgraph_f1(candidate, reference)
print(f"entity F1:   {score.entity_f1:.4f}   (precision 2/3, recall 2/2)")
print(f"relation F1: {score.relation_f1:.4f}   (precision 1/1, recall 1/2)")
print(f"combined:    {score.combined:.4f}   (mean of the two)")
print()

# identical graphs score perfectly; two empty graphs do as well, since
# there is nothing to miss
identity = radgraph_f1(reference, reference)
empty = radgraph_f1(ReportGraph((), ()), ReportGraph((), ()))
print("identity combined:", identity.combined)
print("empty-vs-empty combined:", empty.combined)
print()

# corpus scores are macro means over pairs, scaled to 0..100
pairs = [(candidate, reference), (reference, reference)]
print(f"corpus combined score: {corpus_radgraph_f1(pairs):.1f}")
