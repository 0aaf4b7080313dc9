"""Mention candidates and coreference scoring on one document.

Encodes tokens with the toy encoder, enumerates spans, prunes them by
mention score, computes the bilinear pairwise score matrix and decodes
entity clusters (including singletons).

Run: python demos/02_candidates_and_coref.py
"""

import torch

from docjoint import MentionScorer, ToyEncoder, enumerate_spans, generate_toy_corpus, score_and_prune
from docjoint.coref import BilinearCorefScorer, decode_clusters

torch.manual_seed(0)
docs, schema = generate_toy_corpus(n_docs=3, seed=4)
doc = docs[0]
print(f"document {doc.id}: {' '.join(t.text for t in doc.tokens[:18])} ...")

encoder = ToyEncoder(dim=16, seed=0)
vectors = encoder.encode(doc)
print(f"encoded: {tuple(vectors.shape)} (tokens x dim)")

spans = enumerate_spans(doc, max_span_width=2)
print(f"enumerated {len(spans)} spans of width <= 2 within sentences")

scorer = MentionScorer(span_dim=32)
candidates = score_and_prune(spans, vectors, scorer, ratio=0.4, cap=64)
print(f"pruned to {len(candidates)} candidates (top ceil(0.4 * {len(doc)}))")
for i in range(min(4, len(candidates))):
    c = candidates[i]
    print(f"  [{i}] {doc.span_text(c.span)!r:16} score {c.mention_score:+.3f}")

coref = BilinearCorefScorer(span_dim=32)
scores = coref(candidates.embeddings, candidates.mention_scores)
print(f"\npairwise coreference scores: {tuple(scores.shape)}")

clusters = decode_clusters(scores, candidates.mention_scores, candidates.spans)
print(f"decoded {len(clusters)} clusters from the untrained model:")
for cl in clusters[:6]:
    print("  ", [doc.span_text(m) for m in cl])
print("(untrained parameters produce arbitrary clusters; see demo 05 for training)")
