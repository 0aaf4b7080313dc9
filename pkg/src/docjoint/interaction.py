"""Task-interaction mechanisms layered on mention-level joint decoding.

Graph propagation (GP): each relation type forms a directed subgraph over the
mention candidates with relation scores as edge weights; GAT-like attention
aggregates type-specific messages into a residual update of the candidate
embeddings, applied once before coreference scoring.

Graph compatibility (GC): a mention's relation-score row is treated as its
local graph; an L1 distance between two rows over a pruned shared neighbor
set, weighted per type, yields a secondary coreference signal trained with a
margin-based contrastive loss and subtracted from the coreference score.
"""

from __future__ import annotations

import torch
from torch import Tensor, nn

from .coref import align_to_gold
from .corpus import Span


class PropagationLayer(nn.Module):
    """Per-relation-type node transformations for graph propagation.

    One (d, d) matrix per real relation type (TH does not propagate). The
    default zero init makes the first forward pass an exact identity on the
    embeddings, so the setting starts from the plain mention-level model.
    """

    def __init__(self, span_dim: int, num_types: int, init: str = "zeros"):
        super().__init__()
        if init == "zeros":
            weight = torch.zeros(num_types, span_dim, span_dim)
        elif init == "normal":
            weight = torch.randn(num_types, span_dim, span_dim) * span_dim**-0.5
        else:
            raise ValueError(f"unknown propagation init {init!r}")
        self.weight = nn.Parameter(weight)
        self.num_types = num_types

    def forward(self, embeddings: Tensor, rel_scores: Tensor) -> Tensor:
        return propagate(embeddings, rel_scores, self.weight)


def propagation_attention(rel_scores: Tensor, head: int, type_index: int) -> Tensor:
    """Attention of node ``head`` over its neighbors for one relation type.

    Neighbors are all other candidates; weights are exp(relu(score))
    normalized over the neighbor set. Returns a length-(n-1) tensor aligned
    with the candidate order minus ``head`` (empty when there are no
    neighbors).
    """
    n = rel_scores.shape[0]
    others = [k for k in range(n) if k != head]
    if not others:
        return rel_scores.new_zeros((0,))
    raw = torch.relu(rel_scores[head, others, type_index])
    return torch.softmax(raw, dim=0)


def propagate(embeddings: Tensor, rel_scores: Tensor, prop_weight: Tensor) -> Tensor:
    """One round of per-type graph propagation with a residual update.

    For each node v (in the head role) and real type i, attention over all
    other nodes t weights the transformed neighbor embeddings; the per-type
    messages pass through tanh and their mean is added to v's embedding:

        alpha_vt = softmax_t(relu(score_i(v, t)))
        msg_i(v) = tanh(sum_t alpha_vt * g_t @ W_i)
        g'_v     = g_v + sum_i msg_i(v) / |R|

    With a single candidate there are no neighbors and the embedding passes
    through unchanged.
    """
    n, dim = embeddings.shape
    num_types = prop_weight.shape[0]
    if n <= 1 or num_types == 0:
        return embeddings

    scores = rel_scores[:, :, :num_types]  # real types only; TH never propagates
    raw = torch.relu(scores.permute(2, 0, 1))  # (R, n, n)
    mask = torch.eye(n, dtype=torch.bool)
    neg_inf = torch.finfo(embeddings.dtype).min
    raw = raw.masked_fill(mask, neg_inf)
    alpha = torch.softmax(raw, dim=2)  # rows sum to 1 over neighbors

    transformed = torch.einsum("td,rde->rte", embeddings, prop_weight)  # (R, n, d)
    messages = torch.tanh(torch.bmm(alpha, transformed))  # (R, n, d)
    return embeddings + messages.sum(dim=0) / num_types


def prune_neighbors(rel_scores: Tensor, k: int) -> tuple[int, ...]:
    """Document-wide top-k candidate nodes by total relation-score saliency.

    Saliency of node v sums its head-role and tail-role scores against every
    other node over the real relation types. Ties break by candidate index;
    the result is an index tuple in ascending order, size min(k, n).
    """
    if k < 1:
        raise ValueError("prune size k must be >= 1")
    n = rel_scores.shape[0]
    real = rel_scores[:, :, :-1]
    off_diag = ~torch.eye(n, dtype=torch.bool)
    head_role = (real * off_diag[:, :, None]).sum(dim=(1, 2))
    tail_role = (real * off_diag[:, :, None]).sum(dim=(0, 2))
    saliency = (head_role + tail_role).detach().tolist()
    order = sorted(range(n), key=lambda i: (-saliency[i], i))
    return tuple(sorted(order[: min(k, n)]))


def compatibility_distance(
    rel_scores: Tensor,
    x: int,
    y: int,
    neighbors: tuple[int, ...],
    beta: Tensor,
) -> tuple[Tensor, Tensor]:
    """Per-type L1 distance between two local graphs and its weighted sum.

    d_i = sum over shared neighbors k (excluding x and y themselves) of
    |score_i(x, k) - score_i(y, k)|; the compatibility score is sum_i of
    beta_i * d_i. Returns (d vector over real types, weighted scalar).
    """
    if x == y:
        raise ValueError("compatibility distance requires two distinct candidates")
    ks = [k for k in neighbors if k != x and k != y]
    num_types = beta.shape[0]
    if not ks:
        d = rel_scores.new_zeros(num_types)
        return d, (beta * d).sum()
    diff = rel_scores[x, ks, :num_types] - rel_scores[y, ks, :num_types]
    d = diff.abs().sum(dim=0)
    return d, (beta * d).sum()


def compatibility_matrix(
    rel_scores: Tensor, neighbors: tuple[int, ...], beta: Tensor
) -> Tensor:
    """Weighted local-graph distances for all candidate pairs: (n, n).

    Matches :func:`compatibility_distance` entrywise (the per-pair neighbor
    set drops x and y from the shared set); symmetric with zero diagonal.
    """
    n = rel_scores.shape[0]
    num_types = beta.shape[0]
    if n == 0:
        return rel_scores.new_zeros((0, 0))
    ks = torch.tensor(neighbors, dtype=torch.long)
    s = rel_scores[:, :, :num_types]  # (n, n, R)
    rows = s[:, ks, :]  # (n, K, R)
    d = (rows[:, None, :, :] - rows[None, :, :, :]).abs().sum(dim=2)  # (n, n, R)

    # the pair (x, y) excludes x and y from the shared neighbor set: remove
    # the k = x term |s(x, x) - s(y, x)| and the k = y term |s(x, y) - s(y, y)|
    in_set = torch.zeros(n, dtype=torch.bool)
    in_set[ks] = True
    diag = s[torch.arange(n), torch.arange(n), :]  # (n, R): s(v, v)
    corr_x = (diag[:, None, :] - s.permute(1, 0, 2)).abs() * in_set[:, None, None].to(s.dtype)
    corr_y = (s - diag[None, :, :]).abs() * in_set[None, :, None].to(s.dtype)
    return (d - corr_x - corr_y) @ beta


def interpolate_coref(coref_scores: Tensor, compat_scores: Tensor, lam: float) -> Tensor:
    """Final coreference scores: original minus lambda times the distances."""
    if lam < 0:
        raise ValueError("interpolation weight lambda must be >= 0")
    return coref_scores - lam * compat_scores


def contrastive_loss(distances: Tensor, labels: Tensor, margin: float) -> Tensor:
    """Siamese contrastive objective, averaged over pairs.

    ``labels`` is 1 for coreferent pairs (distance pulled to zero) and 0
    otherwise (distance pushed beyond ``margin``). Distances are assumed
    non-negative; empty input gives zero loss.
    """
    if margin <= 0:
        raise ValueError("contrastive margin must be > 0")
    if distances.numel() == 0:
        return distances.sum() * 0.0
    pos = labels * distances.pow(2)
    neg = (1.0 - labels) * torch.clamp(margin - distances, min=0.0).pow(2)
    return (pos + neg).mean()


def contrastive_pairs(
    spans: tuple[Span, ...], gold_clusters
) -> tuple[list[tuple[int, int]], Tensor]:
    """Unordered candidate pairs eligible for the contrastive loss.

    Only candidates that exactly match a gold mention participate; the label
    is 1 iff both sit in the same gold cluster. Spurious spans have no
    defined coreference target and are excluded.
    """
    alignment = align_to_gold(spans, gold_clusters)
    gold_idx = [i for i, a in enumerate(alignment) if a >= 0]
    pairs = []
    labels = []
    for a in range(len(gold_idx)):
        for b in range(a + 1, len(gold_idx)):
            i, j = gold_idx[a], gold_idx[b]
            pairs.append((i, j))
            labels.append(1.0 if alignment[i] == alignment[j] else 0.0)
    return pairs, torch.tensor(labels)


class CompatibilityHead(nn.Module):
    """Learned per-type importance weights plus the GC hyperparameters."""

    def __init__(
        self,
        num_types: int,
        lam: float,
        margin: float,
        prune_k: int,
        beta_init: float | None = None,
    ):
        super().__init__()
        if lam < 0 or margin <= 0 or prune_k < 1:
            raise ValueError("invalid GC hyperparameters (need lambda >= 0, margin > 0, k >= 1)")
        init = 1.0 / num_types if beta_init is None else beta_init
        self.beta = nn.Parameter(torch.full((num_types,), float(init)))
        self.lam = lam
        self.margin = margin
        self.prune_k = prune_k

    def forward(self, rel_scores: Tensor) -> Tensor:
        neighbors = prune_neighbors(rel_scores, self.prune_k)
        return compatibility_matrix(rel_scores, neighbors, self.beta)
