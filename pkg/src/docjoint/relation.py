"""Relation scoring at mention and entity level, label transfer, aggregation
and adaptive-threshold decoding.

Every ordered pair of units (mention candidates, or pooled entities for the
baseline settings) gets one biaffine score per relation type plus a learned
threshold pseudo-type TH; a triple is emitted iff its type outscores TH for
that pair. Mention-level training labels are transferred from entity-level
gold triples: every cross-product mention pair expresses the same relations
as its entity pair.
"""

from __future__ import annotations

import torch
from torch import Tensor, nn

from .corpus import EntityCluster, RelationTriple, Span


class BiaffineRelationScorer(nn.Module):
    """Per-type biaffine scorer with a reserved threshold type.

    ``num_types`` counts real relation types; internally one extra TH type is
    appended (index ``num_types``). Head/tail prior networks produce one score
    per type. With ``proj_dim`` set, inputs are projected before the bilinear
    form to keep the per-type matrices small for wide encoders.
    """

    def __init__(
        self,
        span_dim: int,
        num_types: int,
        prior_hidden: int = 64,
        proj_dim: int | None = None,
    ):
        super().__init__()
        self.num_types = num_types
        inner = proj_dim if proj_dim is not None else span_dim
        if proj_dim is not None:
            self.proj_head = nn.Linear(span_dim, proj_dim)
            self.proj_tail = nn.Linear(span_dim, proj_dim)
        else:
            self.proj_head = self.proj_tail = None
        self.weight = nn.Parameter(torch.randn(num_types + 1, inner, inner) * inner**-0.5)
        self.head_prior = nn.Sequential(
            nn.Linear(span_dim, prior_hidden), nn.ReLU(), nn.Linear(prior_hidden, num_types + 1)
        )
        self.tail_prior = nn.Sequential(
            nn.Linear(span_dim, prior_hidden), nn.ReLU(), nn.Linear(prior_hidden, num_types + 1)
        )

    @property
    def th_index(self) -> int:
        return self.num_types

    def _project(self, embeddings: Tensor) -> tuple[Tensor, Tensor]:
        if self.proj_head is None:
            return embeddings, embeddings
        return torch.tanh(self.proj_head(embeddings)), torch.tanh(self.proj_tail(embeddings))

    def forward(self, embeddings: Tensor) -> Tensor:
        """Score all ordered pairs: (n, n, num_types + 1)."""
        heads, tails = self._project(embeddings)
        bilinear = torch.einsum("hd,rde,te->htr", heads, self.weight, tails)
        return bilinear + self.head_prior(embeddings)[:, None, :] + self.tail_prior(embeddings)[None, :, :]

    def score_pair(self, g_h: Tensor, g_t: Tensor, type_index: int) -> Tensor:
        """Biaffine score of one ordered pair for one type (TH allowed)."""
        if not 0 <= type_index <= self.num_types:
            raise ValueError(f"relation type index {type_index} out of range")
        heads, tails = self._project(torch.stack([g_h, g_t]))
        bilinear = heads[0] @ self.weight[type_index] @ tails[1]
        return (
            bilinear
            + self.head_prior(g_h)[type_index]
            + self.tail_prior(g_t)[type_index]
        )


def relation_score(
    g_h: Tensor, g_t: Tensor, weight: Tensor, head_prior: Tensor, tail_prior: Tensor
) -> Tensor:
    """Functional form of the per-type score: g_h W g_t^T + s_h + s_t."""
    if g_h.shape[-1] != weight.shape[0] or g_t.shape[-1] != weight.shape[1]:
        raise ValueError(
            f"embedding dim {g_h.shape[-1]}/{g_t.shape[-1]} does not match W {tuple(weight.shape)}"
        )
    return g_h @ weight @ g_t + head_prior + tail_prior


def transfer_labels(
    gold_clusters: tuple[EntityCluster, ...],
    gold_relations: tuple[RelationTriple, ...],
    spans: tuple[Span, ...],
    num_types: int,
) -> Tensor:
    """Entity-level triples as mention-pair labels: (n, n, num_types) bool.

    Pair (h, t) carries type r iff some gold triple (e_h, e_t, r) exists with
    span h in e_h and span t in e_t. Pairs involving a span that matches no
    gold mention stay all-false (pure TH negatives), as do self-pairs.
    """
    n = len(spans)
    labels = torch.zeros(n, n, num_types, dtype=torch.bool)
    members: dict[str, list[int]] = {}
    span_pos = {s: i for i, s in enumerate(spans)}
    for cluster in gold_clusters:
        idx = [span_pos[m] for m in cluster.mentions if m in span_pos]
        if idx:
            members[cluster.id] = idx
    for triple in gold_relations:
        heads = members.get(triple.head, [])
        tails = members.get(triple.tail, [])
        for h in heads:
            for t in tails:
                if h != t:
                    labels[h, t, triple.relation] = True
    return labels


def entity_pair_labels(
    gold_clusters: tuple[EntityCluster, ...],
    gold_relations: tuple[RelationTriple, ...],
    num_types: int,
) -> Tensor:
    """(E, E, num_types) bool labels over gold cluster indices."""
    index = {c.id: i for i, c in enumerate(gold_clusters)}
    n = len(gold_clusters)
    labels = torch.zeros(n, n, num_types, dtype=torch.bool)
    for triple in gold_relations:
        labels[index[triple.head], index[triple.tail], triple.relation] = True
    return labels


def adaptive_threshold_loss(scores: Tensor, labels: Tensor) -> Tensor:
    """ATLOP-style two-part ranking loss, averaged over ordered pairs.

    ``scores`` is (m, m, T+1) with TH last; ``labels`` is (m, m, T) bool.
    Part one ranks each positive type above TH within {positives, TH}; part
    two ranks TH above all negative types within {negatives, TH}. Self-pairs
    are excluded.
    """
    m = scores.shape[0]
    if m < 2:
        return scores.sum() * 0.0
    off_diag = ~torch.eye(m, dtype=torch.bool)
    pair_scores = scores[off_diag]  # (P, T+1)
    pair_labels = labels[off_diag]  # (P, T)

    neg_inf = torch.finfo(scores.dtype).min
    th = torch.zeros(pair_labels.shape[0], 1, dtype=torch.bool)
    pos_mask = torch.cat([pair_labels, th], dim=1)
    th_mask = torch.zeros_like(pos_mask)
    th_mask[:, -1] = True

    # positives vs TH
    logits1 = torch.where(pos_mask | th_mask, pair_scores, torch.full_like(pair_scores, neg_inf))
    logp1 = torch.log_softmax(logits1, dim=1)
    loss1 = -torch.where(pos_mask, logp1, torch.zeros_like(logp1)).sum(dim=1)

    # TH vs negatives
    logits2 = torch.where(pos_mask, torch.full_like(pair_scores, neg_inf), pair_scores)
    logp2 = torch.log_softmax(logits2, dim=1)
    loss2 = -logp2[:, -1]

    return (loss1 + loss2).mean()


def pool_entity_embeddings(mention_embeddings: Tensor) -> Tensor:
    """Logsumexp pooling of a cluster's mention embeddings: (k, d) -> (d,)."""
    if mention_embeddings.shape[0] == 0:
        raise ValueError("cannot pool an empty cluster")
    return torch.logsumexp(mention_embeddings, dim=0)


EntityScoreTable = dict[tuple[int, int], Tensor]


def aggregate_entity_scores(
    rel_scores: Tensor,
    clusters: list[tuple[Span, ...]],
    spans: tuple[Span, ...],
) -> EntityScoreTable:
    """Entity-pair scores as the mean over the mention-pair cartesian product.

    ``rel_scores`` is the (n, n, T+1) mention-level tensor over ``spans``.
    Self mention pairs are excluded; ordered cluster pairs with no remaining
    mention pair (a singleton against itself) get no entry.
    """
    span_pos = {s: i for i, s in enumerate(spans)}
    indices = [[span_pos[m] for m in cluster] for cluster in clusters]
    table: EntityScoreTable = {}
    for hi, heads in enumerate(indices):
        for ti, tails in enumerate(indices):
            pairs = [(h, t) for h in heads for t in tails if h != t]
            if not pairs:
                continue
            stacked = torch.stack([rel_scores[h, t] for h, t in pairs])
            table[(hi, ti)] = stacked.mean(dim=0)
    return table


def entity_score_table(entity_scores: Tensor) -> EntityScoreTable:
    """Tensor (E, E, T+1) from the entity-level scorer as a score table."""
    table: EntityScoreTable = {}
    n = entity_scores.shape[0]
    for h in range(n):
        for t in range(n):
            if h != t:
                table[(h, t)] = entity_scores[h, t]
    return table


def decode_relations(table: EntityScoreTable) -> list[tuple[int, int, int]]:
    """Emit (head, tail, type) where the type score strictly beats TH.

    No triples for an entity paired with itself; output sorted for
    determinism.
    """
    triples = []
    for (h, t), vec in table.items():
        if h == t:
            continue
        vec = vec.detach()
        th = float(vec[-1])
        for r in range(vec.shape[0] - 1):
            if float(vec[r]) > th:
                triples.append((h, t, r))
    triples.sort()
    return triples
