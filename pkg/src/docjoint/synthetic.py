"""Synthetic corpora with planted clusters and relation triples.

Documents are built from a small vocabulary: each entity gets a unique
surface form repeated verbatim at every mention (so coreference is learnable
from token identity), relations are planted between entity pairs, and filler
tokens pad the sentences. Used by the CPU-scale training tests and the demo
scripts.
"""

from __future__ import annotations

import random

from .corpus import Document, EntityCluster, RelationSchema, RelationTriple, Span, Token


def generate_toy_corpus(
    n_docs: int = 20,
    n_relation_types: int = 4,
    max_tokens_per_doc: int = 60,
    entities_per_doc: tuple[int, int] = (3, 5),
    mentions_per_entity: tuple[int, int] = (1, 3),
    seed: int = 0,
) -> tuple[list[Document], RelationSchema]:
    """Generate a deterministic toy corpus.

    Vocabulary stays under 200 distinct tokens: entity surface tokens,
    a small filler pool and a determiner. Entity surfaces are unique per
    document (reuse across documents is allowed and harmless). Each document
    plants relation triples between distinct entities; ~a third of entities
    stay singletons, matching the singleton-heavy corpora this mimics.
    """
    rng = random.Random(seed)
    schema = RelationSchema(types=tuple(f"rel{i}" for i in range(n_relation_types)))
    fillers = [f"w{i}" for i in range(30)]
    entity_tokens = [f"ent{i}" for i in range(120)]

    docs = []
    for di in range(n_docs):
        n_entities = rng.randint(*entities_per_doc)
        surfaces = rng.sample(entity_tokens, n_entities)
        # width-2 mentions for some entities exercise multi-token spans
        wide = [rng.random() < 0.4 for _ in range(n_entities)]

        mention_queue: list[tuple[int, tuple[str, ...]]] = []
        for ei in range(n_entities):
            form = ("the", surfaces[ei]) if wide[ei] else (surfaces[ei],)
            for _ in range(rng.randint(*mentions_per_entity)):
                mention_queue.append((ei, form))
        rng.shuffle(mention_queue)

        sentences: list[list[str]] = []
        mention_spans: dict[int, list[Span]] = {ei: [] for ei in range(n_entities)}
        offset = 0
        while mention_queue and offset < max_tokens_per_doc - 4:
            sent: list[str] = [rng.choice(fillers)]
            for _ in range(rng.randint(1, 2)):
                if not mention_queue:
                    break
                ei, form = mention_queue.pop()
                start = offset + len(sent)
                sent.extend(form)
                mention_spans[ei].append(Span(start, start + len(form) - 1))
                sent.append(rng.choice(fillers))
            if offset + len(sent) > max_tokens_per_doc:
                break
            sentences.append(sent)
            offset += len(sent)

        tokens = []
        pos = 0
        for si, sent in enumerate(sentences):
            for text in sent:
                tokens.append(Token(text=text, sentence_index=si, document_offset=pos))
                pos += 1

        clusters = tuple(
            EntityCluster(id=str(ei), mentions=tuple(sorted(set(spans))))
            for ei, spans in mention_spans.items()
            if spans
        )
        present = [c.id for c in clusters]
        triples = []
        if len(present) >= 2:
            n_triples = rng.randint(1, min(3, len(present) * (len(present) - 1)))
            attempts = 0
            while len(triples) < n_triples and attempts < 20:
                attempts += 1
                h, t = rng.sample(present, 2)
                r = rng.randrange(n_relation_types)
                if all((h, t, r) != tr.key for tr in triples):
                    triples.append(RelationTriple(head=h, tail=t, relation=r))

        docs.append(
            Document(
                id=f"toy{di:03d}",
                tokens=tuple(tokens),
                gold_clusters=clusters,
                gold_relations=tuple(triples),
            )
        )
    return docs, schema


def generate_gc_probe_corpus(
    n_docs: int = 12, seed: int = 7
) -> tuple[list[Document], RelationSchema]:
    """Corpus tailored to the graph-compatibility mechanism.

    Every entity has at least two mentions and participates in relations, so
    coreferent mentions share identical relation contexts after label
    transfer while non-coreferent gold pairs differ in theirs.
    """
    return generate_toy_corpus(
        n_docs=n_docs,
        n_relation_types=4,
        entities_per_doc=(3, 4),
        mentions_per_entity=(2, 3),
        seed=seed,
    )
