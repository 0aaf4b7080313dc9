"""Document encoders and mention-candidate generation.

The encoder contract is pluggable: anything that maps a document to one
contextual vector per token (for a prefix of the document bounded by the
encoder's input limit). A deterministic toy encoder is always available so
the full pipeline runs on CPU; a transformers adapter covers pretrained
encoders.

Candidates are spans represented by the concatenation of their boundary
token vectors, scored by a feed-forward mention scorer and pruned to the
top spans per document.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import torch
from torch import Tensor, nn

from .corpus import Document, Span


class DocumentEncoder(nn.Module):
    """Contract: ``encode(doc)`` returns an ``(L, dim)`` tensor of contextual
    token vectors where ``L = min(len(doc), max_input_length)``; tokens past
    the limit are truncated. Must be deterministic in eval mode."""

    dim: int
    max_input_length: int

    def encode(self, doc: Document) -> Tensor:
        raise NotImplementedError


def _hash_bucket(text: str, buckets: int) -> int:
    return zlib.crc32(text.encode("utf-8")) % buckets


class ToyEncoder(DocumentEncoder):
    """Small trainable encoder for tests and CPU-scale runs.

    Hash-bucketed token embeddings followed by window-3 convolutional mixing
    layers with residual connections. Parameter init is driven by a local
    seeded generator, so two instances with the same seed are identical.
    """

    def __init__(
        self,
        dim: int = 32,
        vocab_buckets: int = 1024,
        max_input_length: int = 512,
        n_layers: int = 2,
        seed: int = 0,
    ):
        super().__init__()
        self.dim = dim
        self.vocab_buckets = vocab_buckets
        self.max_input_length = max_input_length
        gen = torch.Generator().manual_seed(seed)
        self.embedding = nn.Parameter(torch.randn(vocab_buckets, dim, generator=gen) * 0.5)
        self.mix_weights = nn.ParameterList(
            nn.Parameter(torch.randn(dim, 3 * dim, generator=gen) * (3 * dim) ** -0.5)
            for _ in range(n_layers)
        )
        self.mix_biases = nn.ParameterList(
            nn.Parameter(torch.zeros(dim)) for _ in range(n_layers)
        )

    def encode(self, doc: Document) -> Tensor:
        ids = [
            _hash_bucket(tok.text, self.vocab_buckets)
            for tok in doc.tokens[: self.max_input_length]
        ]
        if not ids:
            return self.embedding.new_zeros((0, self.dim))
        h = self.embedding[torch.tensor(ids, dtype=torch.long)]
        for weight, bias in zip(self.mix_weights, self.mix_biases):
            padded = torch.cat([h.new_zeros(1, self.dim), h, h.new_zeros(1, self.dim)], dim=0)
            windows = torch.cat([padded[:-2], padded[1:-1], padded[2:]], dim=-1)
            h = h + torch.relu(windows @ weight.T + bias)
        return h

    def forward(self, doc: Document) -> Tensor:
        return self.encode(doc)


class TransformerDocumentEncoder(DocumentEncoder):
    """Adapter for huggingface-style pretrained encoders.

    Subword-tokenizes the document's tokens, feeds up to ``max_subtokens``
    subtokens through the model in fixed-size segments (two 512 segments by
    default) and pools the first-subtoken vector of each surviving token.

    ``model``/``tokenizer`` may be passed as objects or loaded by name when
    the ``transformers`` package is installed.
    """

    def __init__(
        self,
        model=None,
        tokenizer=None,
        model_name: str | None = None,
        max_subtokens: int = 1024,
        segment_length: int = 512,
    ):
        super().__init__()
        if model is None or tokenizer is None:
            if model_name is None:
                raise ValueError("pass model and tokenizer objects, or a model_name")
            from transformers import AutoModel, AutoTokenizer  # deferred: optional dep

            tokenizer = AutoTokenizer.from_pretrained(model_name)
            model = AutoModel.from_pretrained(model_name)
        self.model = model
        self.tokenizer = tokenizer
        self.dim = int(model.config.hidden_size)
        self.max_subtokens = max_subtokens
        self.segment_length = segment_length
        # token-level upper bound: at least one subtoken per token
        self.max_input_length = max_subtokens

    def _subtokenize(self, words: list[str]) -> tuple[list[int], list[int]]:
        """Flat subtoken ids plus the first-subtoken position of each word,
        truncated at max_subtokens. Words whose first subtoken does not fit
        are dropped."""
        ids: list[int] = []
        firsts: list[int] = []
        unk = self.tokenizer.unk_token_id
        for word in words:
            pieces = self.tokenizer.encode(word, add_special_tokens=False)
            if not pieces:
                pieces = [unk]
            if len(ids) >= self.max_subtokens:
                break
            firsts.append(len(ids))
            ids.extend(pieces)
        return ids[: self.max_subtokens], [f for f in firsts if f < self.max_subtokens]

    def encode(self, doc: Document) -> Tensor:
        words = [tok.text for tok in doc.tokens]
        device = next(self.model.parameters()).device
        if not words:
            return torch.zeros((0, self.dim), device=device)
        ids, firsts = self._subtokenize(words)

        cls_id = self.tokenizer.cls_token_id
        sep_id = self.tokenizer.sep_token_id
        body = self.segment_length - 2
        pieces = []
        for seg_start in range(0, len(ids), body):
            seg = [cls_id] + ids[seg_start : seg_start + body] + [sep_id]
            input_ids = torch.tensor([seg], dtype=torch.long, device=device)
            hidden = self.model(input_ids=input_ids).last_hidden_state[0]
            pieces.append(hidden[1:-1])
        flat = torch.cat(pieces, dim=0)
        return flat[torch.tensor(firsts, dtype=torch.long, device=device)]

    def forward(self, doc: Document) -> Tensor:
        return self.encode(doc)


# ---------------------------------------------------------------------------
# mention candidates


@dataclass(frozen=True)
class MentionCandidate:
    span: Span
    embedding: Tensor
    mention_score: float


class CandidateSet:
    """Pruned mention candidates in document order.

    Parallel views over the same ordering: ``spans`` (tuple of Span),
    ``embeddings`` (n, 2*dim) boundary-concatenation vectors, and
    ``mention_scores`` (n,). Embeddings and scores stay differentiable.
    """

    def __init__(self, spans: tuple[Span, ...], embeddings: Tensor, mention_scores: Tensor):
        if list(spans) != sorted(spans):
            raise ValueError("candidates must be sorted by span position")
        if embeddings.shape[0] != len(spans) or mention_scores.shape[0] != len(spans):
            raise ValueError("mismatched candidate tensors")
        self.spans = spans
        self.embeddings = embeddings
        self.mention_scores = mention_scores

    def __len__(self) -> int:
        return len(self.spans)

    def __getitem__(self, i: int) -> MentionCandidate:
        return MentionCandidate(
            span=self.spans[i],
            embedding=self.embeddings[i],
            mention_score=float(self.mention_scores[i].detach()),
        )

    def index_of(self, span: Span) -> int | None:
        try:
            return self.spans.index(span)
        except ValueError:
            return None


def enumerate_spans(
    doc: Document, max_span_width: int, within_sentences: bool = True
) -> list[Span]:
    """All spans of width 1..max_span_width, in (start, end) order.

    By default spans do not cross sentence boundaries, matching corpora whose
    mentions are intra-sentence.
    """
    if max_span_width < 1:
        raise ValueError("max_span_width must be >= 1")
    spans = []
    n = len(doc.tokens)
    for start in range(n):
        if within_sentences:
            sent = doc.tokens[start].sentence_index
            limit = start
            while limit + 1 < n and doc.tokens[limit + 1].sentence_index == sent:
                limit += 1
        else:
            limit = n - 1
        for end in range(start, min(start + max_span_width - 1, limit) + 1):
            spans.append(Span(start, end))
    return spans


def span_embeddings(spans: list[Span], token_vectors: Tensor) -> Tensor:
    """Boundary-concatenation embedding g = [h_start; h_end] per span."""
    if not spans:
        return token_vectors.new_zeros((0, 2 * token_vectors.shape[-1]))
    starts = torch.tensor([s.start for s in spans], dtype=torch.long)
    ends = torch.tensor([s.end for s in spans], dtype=torch.long)
    return torch.cat([token_vectors[starts], token_vectors[ends]], dim=-1)


class MentionScorer(nn.Module):
    """Feed-forward scorer over span embeddings: how likely a span is a mention."""

    def __init__(self, span_dim: int, hidden: int = 64):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(span_dim, hidden), nn.ReLU(), nn.Linear(hidden, 1)
        )

    def forward(self, g: Tensor) -> Tensor:
        return self.net(g).squeeze(-1)


def score_and_prune(
    spans: list[Span],
    token_vectors: Tensor,
    scorer: MentionScorer,
    ratio: float,
    cap: int,
    gold_spans: set[Span] | None = None,
) -> CandidateSet:
    """Keep the top ``min(ceil(ratio * num_tokens), cap)`` spans by mention score.

    Ties break deterministically by (start, end). Spans extending past the
    encoded prefix are dropped first. When ``gold_spans`` is given (training),
    gold spans missing from the top-K are appended so the downstream losses
    always see their targets; the result is re-sorted by position.
    """
    num_tokens = token_vectors.shape[0]
    spans = [s for s in spans if s.end < num_tokens]
    k = min(math.ceil(ratio * num_tokens), cap)
    if not spans or k <= 0:
        empty = token_vectors.new_zeros((0, 2 * token_vectors.shape[-1]))
        return CandidateSet((), empty, token_vectors.new_zeros((0,)))

    g_all = span_embeddings(spans, token_vectors)
    scores_all = scorer(g_all)
    values = scores_all.detach().tolist()
    order = sorted(
        range(len(spans)), key=lambda i: (-values[i], spans[i].start, spans[i].end)
    )
    kept = set(order[:k])
    if gold_spans:
        span_index = {s: i for i, s in enumerate(spans)}
        for gs in gold_spans:
            if gs.end < num_tokens:
                if gs in span_index:
                    kept.add(span_index[gs])
                else:
                    # gold span outside the enumeration (e.g. wider than the
                    # span-width limit): embed it directly
                    spans.append(gs)
                    g_new = span_embeddings([gs], token_vectors)
                    g_all = torch.cat([g_all, g_new], dim=0)
                    scores_all = torch.cat([scores_all, scorer(g_new)])
                    kept.add(len(spans) - 1)

    final = sorted(kept, key=lambda i: (spans[i].start, spans[i].end))
    idx = torch.tensor(final, dtype=torch.long)
    return CandidateSet(
        spans=tuple(spans[i] for i in final),
        embeddings=g_all[idx],
        mention_scores=scores_all[idx],
    )
