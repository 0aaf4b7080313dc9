"""The two task-interaction mechanisms on top of mention-level scoring.

Graph propagation: per-type attention over relation-score subgraphs updates
the mention embeddings before coreference scoring. Graph compatibility: the
L1 distance between two mentions' relation-score rows (their local graphs)
becomes a second coreference signal, trained with a contrastive loss.

Run: python demos/04_graph_interactions.py
"""

import torch

from docjoint.interaction import (
    compatibility_distance,
    compatibility_matrix,
    contrastive_loss,
    interpolate_coref,
    propagate,
    propagation_attention,
    prune_neighbors,
)

torch.manual_seed(2)
n, dim, types = 6, 8, 3
rel_scores = torch.randn(n, n, types + 1)  # last slot is the TH pseudo-type
embeddings = torch.randn(n, dim)

# --- propagation ---------------------------------------------------------
alpha = propagation_attention(rel_scores, head=0, type_index=1)
print(f"attention of node 0 over its {n - 1} neighbors (type 1): "
      f"{[round(v, 3) for v in alpha.tolist()]} (sums to {float(alpha.sum()):.3f})")

weights = torch.randn(types, dim, dim) * 0.3
updated = propagate(embeddings, rel_scores, weights)
delta = (updated - embeddings).norm(dim=1)
print(f"propagation residual norms per node: {[round(v, 3) for v in delta.tolist()]}")
identity = propagate(embeddings, rel_scores, torch.zeros(types, dim, dim))
print(f"zero transformations leave embeddings unchanged: {torch.equal(identity, embeddings)}")

# --- compatibility -------------------------------------------------------
neighbors = prune_neighbors(rel_scores, k=4)
print(f"\ntop-4 salient nodes (shared neighbor set): {neighbors}")

beta = torch.full((types,), 1 / types)
d, s_hat = compatibility_distance(rel_scores, 0, 1, neighbors, beta)
print(f"local-graph distance of nodes (0, 1): per-type {['%.2f' % v for v in d.tolist()]}, "
      f"weighted {float(s_hat):.3f}")

# two nodes with identical outgoing rows are at distance zero
rel_scores[1] = rel_scores[0]
d0, _ = compatibility_distance(rel_scores, 0, 1, neighbors, beta)
print(f"after copying node 0's row onto node 1: distance {d0.tolist()}")

mat = compatibility_matrix(rel_scores, neighbors, beta)
coref = torch.randn(n, n)
final = interpolate_coref(coref, mat, lam=1e-3)
print(f"interpolated coreference scores shift by at most "
      f"{float((final - coref).abs().max()):.4f} at lambda=1e-3")

dist = torch.tensor([0.1, 2.5, 1.0])
label = torch.tensor([1.0, 0.0, 0.0])  # coreferent, not, not
loss = contrastive_loss(dist, label, margin=2.0)
print(f"\ncontrastive loss of distances {dist.tolist()} with labels {label.tolist()}: "
      f"{float(loss):.4f}")
print("(coreferent pairs are pulled to distance 0, others pushed past the margin)")
