"""Pairwise coreference scoring, cluster decoding and the coreference loss.

Scoring is a single lightweight bilinear term plus the two mention priors:
``s_c(x, y) = g_x W g_y^T + s_m(x) + s_m(y)``. Decoding links every candidate
to its best-scoring earlier candidate when that score is positive and keeps
positive-scored unlinked candidates as singleton entities.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .corpus import Span


class BilinearCorefScorer(nn.Module):
    """Holds the bilinear matrix W for pairwise coreference scores."""

    def __init__(self, span_dim: int):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(span_dim, span_dim) * span_dim**-0.5)

    def forward(self, embeddings: Tensor, mention_scores: Tensor) -> Tensor:
        return coref_score_matrix(embeddings, mention_scores, self.weight)


def coref_score(g_x: Tensor, g_y: Tensor, weight: Tensor, s_m_x: Tensor, s_m_y: Tensor) -> Tensor:
    """Score one ordered candidate pair (antecedent x, anaphor y)."""
    if g_x.shape[-1] != weight.shape[0] or g_y.shape[-1] != weight.shape[1]:
        raise ValueError(
            f"embedding dim {g_x.shape[-1]}/{g_y.shape[-1]} does not match W {tuple(weight.shape)}"
        )
    return g_x @ weight @ g_y + s_m_x + s_m_y


def coref_score_matrix(embeddings: Tensor, mention_scores: Tensor, weight: Tensor) -> Tensor:
    """Full n x n score matrix; entry (x, y) scores x as antecedent of y.

    The diagonal is computed mechanically but never consumed.
    """
    bilinear = embeddings @ weight @ embeddings.T
    return bilinear + mention_scores[:, None] + mention_scores[None, :]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def decode_clusters(
    scores: Tensor, mention_scores: Tensor, spans: tuple[Span, ...]
) -> list[tuple[Span, ...]]:
    """Greedy best-antecedent decoding with singleton support.

    Each candidate links to its highest-scoring earlier candidate if that score
    is positive (ties to the earliest); links close transitively into clusters.
    Unlinked candidates survive as singletons iff their mention score is
    positive, otherwise they are discarded.
    """
    n = len(spans)
    if n == 0:
        return []
    scores = scores.detach()
    mention_scores = mention_scores.detach()
    uf = _UnionFind(n)
    linked = [False] * n
    for j in range(1, n):
        col = scores[:j, j]
        best = int((col == col.max()).nonzero()[0])  # ties: earliest antecedent
        if float(col[best]) > 0:
            uf.union(best, j)
            linked[best] = linked[j] = True

    groups: dict[int, list[int]] = {}
    for i in range(n):
        if linked[i]:
            groups.setdefault(uf.find(i), []).append(i)
        elif float(mention_scores[i]) > 0:
            groups[i] = [i]
    clusters = [tuple(spans[i] for i in sorted(members)) for members in groups.values()]
    clusters.sort(key=lambda c: c[0])
    return clusters


def align_to_gold(
    spans: tuple[Span, ...], gold_clusters
) -> list[int]:
    """Gold cluster index per candidate by exact span match; -1 if spurious."""
    span_to_cluster: dict[Span, int] = {}
    for ci, cluster in enumerate(gold_clusters):
        mentions = cluster.mentions if hasattr(cluster, "mentions") else cluster
        for m in mentions:
            span_to_cluster[m] = ci
    return [span_to_cluster.get(s, -1) for s in spans]


def coref_loss(
    scores: Tensor,
    mention_scores: Tensor,
    spans: tuple[Span, ...],
    gold_clusters,
    bce_weight: float = 1.0,
) -> Tensor:
    """Marginal antecedent log-likelihood plus mention-score BCE.

    For each candidate the antecedent distribution ranges over all earlier
    candidates plus a dummy with fixed score 0; the correct mass is the set of
    gold antecedents, or the dummy when the candidate has none among the
    candidates (first mentions, singletons and spurious spans alike). The BCE
    term pushes sigmoid(mention score) towards the gold-mention indicator.
    """
    n = len(spans)
    if n == 0:
        return mention_scores.sum() * 0.0

    alignment = align_to_gold(spans, gold_clusters)
    align_t = torch.tensor(alignment)
    antecedent_ok = torch.triu(torch.ones(n, n, dtype=torch.bool), diagonal=1)
    gold_pair = (
        (align_t[:, None] == align_t[None, :]) & (align_t[:, None] >= 0) & antecedent_ok
    )

    neg_inf = torch.finfo(scores.dtype).min
    padded = torch.cat(
        [
            torch.where(antecedent_ok, scores, torch.full_like(scores, neg_inf)),
            scores.new_zeros(1, n),  # dummy antecedent, fixed score 0
        ],
        dim=0,
    )
    has_gold = gold_pair.any(dim=0)
    correct = torch.cat([gold_pair, (~has_gold)[None, :]], dim=0)
    log_norm = torch.logsumexp(padded, dim=0)
    log_correct = torch.logsumexp(
        torch.where(correct, padded, torch.full_like(padded, neg_inf)), dim=0
    )
    antecedent_loss = (log_norm - log_correct).sum()

    gold_indicator = (align_t >= 0).to(mention_scores.dtype)
    bce = F.binary_cross_entropy_with_logits(mention_scores, gold_indicator, reduction="sum")
    return antecedent_loss + bce_weight * bce
