"""Mention-level relation scoring: label transfer, biaffine scores with the
learned threshold type, MEAN aggregation over predicted clusters and
threshold decoding.

Run: python demos/03_relations_mention_level.py
"""

import torch

from docjoint import generate_toy_corpus
from docjoint.relation import (
    BiaffineRelationScorer,
    aggregate_entity_scores,
    decode_relations,
    transfer_labels,
)

torch.manual_seed(1)
docs, schema = generate_toy_corpus(n_docs=3, seed=8)
doc = next(d for d in docs if d.gold_relations)
spans = tuple(sorted(doc.gold_mention_spans))
print(f"document {doc.id}: {len(spans)} gold mentions, {len(doc.gold_relations)} triples")

# entity-level labels become mention-pair labels over the cartesian product
labels = transfer_labels(doc.gold_clusters, doc.gold_relations, spans, len(schema))
print(f"label tensor {tuple(labels.shape)}: {int(labels.sum())} positive pair-type entries")
for h, t, r in labels.nonzero().tolist()[:5]:
    print(f"  {doc.span_text(spans[h])!r} --{schema.name(r)}--> {doc.span_text(spans[t])!r}")

scorer = BiaffineRelationScorer(span_dim=8, num_types=len(schema))
g = torch.randn(len(spans), 8)
scores = scorer(g)
print(f"\nscore tensor {tuple(scores.shape)} (pairs x {len(schema)} types + TH)")

# pretend the gold clustering was predicted and aggregate mention scores
clusters = [tuple(c.mentions) for c in doc.gold_clusters]
table = aggregate_entity_scores(scores, clusters, spans)
pair = next(iter(table))
print(f"entity pair {pair}: per-type scores {[round(v, 2) for v in table[pair].tolist()]}")

triples = decode_relations(table)
print(f"decoded {len(triples)} triples from the untrained scorer "
      f"(a type fires only when it beats the TH score for that pair)")
for h, t, r in triples[:5]:
    print(f"  cluster {h} --{schema.name(r)}--> cluster {t}")
