"""Data model and corpus ingestion for document-level information extraction.

Documents carry a flat token stream with sentence boundaries, gold entity
clusters (sets of mention spans) and gold entity-level relation triples.
Loaders are provided for the two public corpus formats (DocRED-style single
JSON files and DWIE-style per-document annotation files) plus a canonical
JSON format for caching.
"""

from __future__ import annotations

import json
import math
import random
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class CorpusError(ValueError):
    """Raised for malformed corpus files or annotation inconsistencies."""


@dataclass(frozen=True, order=True)
class Span:
    """Inclusive token-index span: ``start <= end``, both in-document offsets."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise CorpusError(f"invalid span ({self.start}, {self.end})")

    @property
    def width(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Token:
    text: str
    sentence_index: int
    document_offset: int


@dataclass(frozen=True)
class EntityCluster:
    """A set of coreferent mention spans with an opaque string id.

    Mentions are stored sorted for deterministic iteration; set semantics
    apply (duplicates are rejected at construction).
    """

    id: str
    mentions: tuple[Span, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.mentions))
        if len(set(ordered)) != len(ordered):
            raise CorpusError(f"cluster {self.id!r} has duplicate mentions")
        object.__setattr__(self, "mentions", ordered)

    def __len__(self) -> int:
        return len(self.mentions)

    @property
    def is_singleton(self) -> bool:
        return len(self.mentions) == 1


@dataclass(frozen=True)
class RelationTriple:
    """Directed entity-level relation: ``head`` and ``tail`` are cluster ids,
    ``relation`` indexes into the corpus :class:`RelationSchema`."""

    head: str
    tail: str
    relation: int
    evidence: tuple[int, ...] | None = None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.head, self.tail, self.relation)


@dataclass(frozen=True)
class RelationSchema:
    """Ordered set of relation type names."""

    types: tuple[str, ...]

    def __post_init__(self):
        if len(self.types) < 1:
            raise CorpusError("relation schema must contain at least one type")
        if len(set(self.types)) != len(self.types):
            raise CorpusError("relation schema has duplicate type names")

    def __len__(self) -> int:
        return len(self.types)

    def index(self, name: str) -> int:
        try:
            return self.types.index(name)
        except ValueError:
            raise CorpusError(f"unknown relation type {name!r}") from None

    def name(self, index: int) -> str:
        if not 0 <= index < len(self.types):
            raise CorpusError(f"relation index {index} out of range")
        return self.types[index]


@dataclass(frozen=True)
class Document:
    """Immutable document: flat tokens, gold clusters, gold relation triples."""

    id: str
    tokens: tuple[Token, ...]
    gold_clusters: tuple[EntityCluster, ...] = ()
    gold_relations: tuple[RelationTriple, ...] = ()

    def __post_init__(self):
        n = len(self.tokens)
        prev_sent = 0
        for i, tok in enumerate(self.tokens):
            if tok.document_offset != i:
                raise CorpusError(
                    f"document {self.id!r}: token offset {tok.document_offset} at position {i}"
                )
            if tok.sentence_index < prev_sent:
                raise CorpusError(f"document {self.id!r}: sentence indices must be non-decreasing")
            prev_sent = tok.sentence_index
        seen_spans: dict[Span, str] = {}
        ids = set()
        for cluster in self.gold_clusters:
            if cluster.id in ids:
                raise CorpusError(f"document {self.id!r}: duplicate cluster id {cluster.id!r}")
            ids.add(cluster.id)
            if not cluster.mentions:
                raise CorpusError(f"document {self.id!r}: cluster {cluster.id!r} is empty")
            for span in cluster.mentions:
                if span.end >= n:
                    raise CorpusError(
                        f"document {self.id!r}: mention {span} out of bounds (len {n})"
                    )
                if span in seen_spans:
                    raise CorpusError(
                        f"document {self.id!r}: span {span} in clusters "
                        f"{seen_spans[span]!r} and {cluster.id!r}"
                    )
                seen_spans[span] = cluster.id
        for triple in self.gold_relations:
            if triple.head not in ids or triple.tail not in ids:
                raise CorpusError(f"document {self.id!r}: dangling relation {triple.key}")
            if triple.head == triple.tail:
                raise CorpusError(f"document {self.id!r}: self-relation on {triple.head!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def gold_mention_spans(self) -> set[Span]:
        return {m for c in self.gold_clusters for m in c.mentions}

    def cluster_by_id(self, cluster_id: str) -> EntityCluster:
        for c in self.gold_clusters:
            if c.id == cluster_id:
                return c
        raise KeyError(cluster_id)

    def span_text(self, span: Span) -> str:
        return " ".join(t.text for t in self.tokens[span.start : span.end + 1])

    def sentence_bounds(self) -> list[tuple[int, int]]:
        """Half-open ``(start, end)`` token ranges of each sentence."""
        bounds: list[tuple[int, int]] = []
        for i, tok in enumerate(self.tokens):
            if tok.sentence_index >= len(bounds):
                while len(bounds) < tok.sentence_index:
                    bounds.append((i, i))  # absent sentence index: empty sentence
                bounds.append((i, i + 1))
            else:
                s, _ = bounds[tok.sentence_index]
                bounds[tok.sentence_index] = (s, i + 1)
        return bounds


def make_tokens(sentences: Sequence[Sequence[str]]) -> tuple[Token, ...]:
    """Flatten sentence-tokenized text into a Token tuple."""
    tokens = []
    offset = 0
    for si, sent in enumerate(sentences):
        for text in sent:
            tokens.append(Token(text=text, sentence_index=si, document_offset=offset))
            offset += 1
    return tuple(tokens)


# ---------------------------------------------------------------------------
# cluster/relation assembly shared by the loaders


def _resolve_span_conflicts(
    doc_id: str, raw_clusters: list[tuple[str, list[Span]]]
) -> list[tuple[str, list[Span]]]:
    """Enforce disjoint clusters: a span annotated under two clusters stays with
    the first and is dropped from later ones (rare annotation noise)."""
    seen: dict[Span, str] = {}
    out = []
    for cid, spans in raw_clusters:
        kept = []
        for span in sorted(set(spans)):
            if span in seen:
                warnings.warn(
                    f"document {doc_id!r}: span {span} in clusters {seen[span]!r} "
                    f"and {cid!r}; keeping first"
                )
                continue
            seen[span] = cid
            kept.append(span)
        out.append((cid, kept))
    return out


def _assemble_document(
    doc_id: str,
    tokens: tuple[Token, ...],
    raw_clusters: list[tuple[str, list[Span]]],
    raw_relations: list[tuple[str, str, int, tuple[int, ...] | None]],
    drop_empty: bool,
) -> Document:
    """Build a validated Document, optionally removing empty clusters and the
    relations that involve them."""
    raw_clusters = _resolve_span_conflicts(doc_id, raw_clusters)
    removed = {cid for cid, spans in raw_clusters if not spans}
    if removed and not drop_empty:
        raise CorpusError(f"document {doc_id!r}: empty entity clusters {sorted(removed)}")
    clusters = tuple(
        EntityCluster(id=cid, mentions=tuple(spans)) for cid, spans in raw_clusters if spans
    )
    triples = []
    seen_keys = set()
    for head, tail, rel, evidence in raw_relations:
        if head in removed or tail in removed:
            continue
        key = (head, tail, rel)
        if key in seen_keys:  # annotation rows may repeat a fact
            continue
        seen_keys.add(key)
        triples.append(RelationTriple(head=head, tail=tail, relation=rel, evidence=evidence))
    return Document(
        id=doc_id, tokens=tokens, gold_clusters=clusters, gold_relations=tuple(triples)
    )


def _collect_schema(names: Iterable[str], schema: RelationSchema | None) -> RelationSchema:
    if schema is not None:
        return schema
    unique = sorted(set(names))
    if not unique:
        unique = ["NA"]  # corpora with no annotated relations still need a schema
    return RelationSchema(types=tuple(unique))


# ---------------------------------------------------------------------------
# DocRED


def load_docred(
    path: str | Path, schema: RelationSchema | None = None
) -> tuple[list[Document], RelationSchema]:
    """Load a DocRED-format JSON split.

    Each document carries ``title``, ``sents`` (sentence-tokenized text),
    ``vertexSet`` (mention clusters; cluster index is the h_idx/t_idx used by
    labels) and optional ``labels`` with (h_idx, t_idx, r, evidence). Mention
    positions are half-open sentence-local offsets and become inclusive
    document-level spans. Evidence lists are preserved verbatim.

    Pass ``schema`` to reuse a relation schema built from another split;
    otherwise the schema is the sorted set of relation names found in the file.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CorpusError(f"malformed JSON in {path}: {e}") from e
    if not isinstance(raw, list):
        raise CorpusError(f"{path}: expected a JSON list of documents")

    rel_names = {lab["r"] for doc in raw for lab in doc.get("labels", [])}
    schema = _collect_schema(rel_names, schema)

    docs = []
    for di, entry in enumerate(raw):
        doc_id = entry.get("title", f"doc{di}")
        try:
            docs.append(_parse_docred_document(doc_id, entry, schema))
        except (KeyError, TypeError, IndexError) as e:
            raise CorpusError(f"document {doc_id!r}: malformed entry ({e})") from e
    return docs, schema


def _parse_docred_document(doc_id: str, entry: dict, schema: RelationSchema) -> Document:
    sents = entry["sents"]
    tokens = make_tokens(sents)
    sent_offsets = [0]
    for sent in sents:
        sent_offsets.append(sent_offsets[-1] + len(sent))

    raw_clusters: list[tuple[str, list[Span]]] = []
    for ci, vertex in enumerate(entry["vertexSet"]):
        spans = []
        for mention in vertex:
            sid = mention["sent_id"]
            pos = mention["pos"]
            if not 0 <= sid < len(sents):
                raise CorpusError(f"document {doc_id!r}: mention sent_id {sid} out of range")
            if not 0 <= pos[0] < pos[1] <= len(sents[sid]):
                raise CorpusError(
                    f"document {doc_id!r}: mention pos {pos} out of range in sentence {sid}"
                )
            spans.append(Span(sent_offsets[sid] + pos[0], sent_offsets[sid] + pos[1] - 1))
        raw_clusters.append((str(ci), spans))

    n_clusters = len(raw_clusters)
    raw_relations = []
    for lab in entry.get("labels", []):
        h, t = lab["h"], lab["t"]
        if not (0 <= h < n_clusters and 0 <= t < n_clusters):
            raise CorpusError(f"document {doc_id!r}: label references entity {max(h, t)}")
        evidence = tuple(lab["evidence"]) if lab.get("evidence") is not None else None
        raw_relations.append((str(h), str(t), schema.index(lab["r"]), evidence))
    return _assemble_document(doc_id, tokens, raw_clusters, raw_relations, drop_empty=False)


# ---------------------------------------------------------------------------
# DWIE

_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_SENT_FINAL = {".", "!", "?"}


def tokenize_with_offsets(content: str) -> list[tuple[str, int, int, int]]:
    """Tokenize raw text into (text, sentence_index, char_start, char_end).

    Word characters group into tokens, punctuation is split off, whitespace is
    dropped. A new sentence starts after sentence-final punctuation or a
    newline.
    """
    out = []
    sent = 0
    prev_end = 0
    prev_text = ""
    for m in _WORD_RE.finditer(content):
        if out and ("\n" in content[prev_end : m.start()] or prev_text in _SENT_FINAL):
            sent += 1
        out.append((m.group(), sent, m.start(), m.end()))
        prev_end = m.end()
        prev_text = m.group()
    return out


def load_dwie(
    path: str | Path, schema: RelationSchema | None = None, tag: str | None = None
) -> tuple[list[Document], RelationSchema]:
    """Load a directory of DWIE-style annotation files.

    Each ``*.json`` file holds one document: raw ``content`` text, ``mentions``
    with character offsets and a ``concept`` index, ``concepts`` (the entity
    inventory; possibly without any mention, e.g. link-only entities) and
    ``relations`` as (s, p, o) concept triples. The content is tokenized here;
    mention character ranges map to covering token spans.

    Empty entities (concepts with zero mentions) are removed together with
    every relation that involves them. With ``tag`` set, only documents whose
    ``tags`` list contains it are kept (the public corpus marks splits that
    way instead of using directories).
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == ".json")
        if not files:
            raise CorpusError(f"{path}: no .json annotation files found")
    else:
        files = [path]

    entries = []
    for f in files:
        try:
            entries.append((f, json.loads(f.read_text())))
        except json.JSONDecodeError as e:
            raise CorpusError(f"malformed JSON in {f}: {e}") from e
    if tag is not None:
        entries = [(f, e) for f, e in entries if tag in e.get("tags", ())]

    rel_names = {r["p"] for _, entry in entries for r in entry.get("relations", [])}
    schema = _collect_schema(rel_names, schema)

    docs = []
    for f, entry in entries:
        doc_id = str(entry.get("id", f.stem))
        try:
            docs.append(_parse_dwie_document(doc_id, entry, schema))
        except (KeyError, TypeError, IndexError) as e:
            raise CorpusError(f"document {doc_id!r}: malformed entry ({e})") from e
    return docs, schema


def _parse_dwie_document(doc_id: str, entry: dict, schema: RelationSchema) -> Document:
    content = entry["content"]
    toks = tokenize_with_offsets(content)
    tokens = tuple(
        Token(text=t, sentence_index=s, document_offset=i) for i, (t, s, _, _) in enumerate(toks)
    )

    concept_ids = [c["concept"] for c in entry.get("concepts", [])]
    mention_spans: dict[int, list[Span]] = {cid: [] for cid in concept_ids}
    for mention in entry.get("mentions", []):
        begin, end = mention["begin"], mention["end"]
        if not 0 <= begin < end <= len(content):
            raise CorpusError(f"document {doc_id!r}: mention offsets ({begin}, {end}) invalid")
        covering = [i for i, (_, _, cs, ce) in enumerate(toks) if cs < end and ce > begin]
        if not covering:
            raise CorpusError(f"document {doc_id!r}: mention ({begin}, {end}) covers no token")
        cid = mention["concept"]
        mention_spans.setdefault(cid, []).append(Span(covering[0], covering[-1]))

    raw_clusters = [(str(cid), spans) for cid, spans in sorted(mention_spans.items())]
    raw_relations = [
        (str(r["s"]), str(r["o"]), schema.index(r["p"]), None)
        for r in entry.get("relations", [])
    ]
    return _assemble_document(doc_id, tokens, raw_clusters, raw_relations, drop_empty=True)


# ---------------------------------------------------------------------------
# statistics and splitting


@dataclass(frozen=True)
class CorpusStatistics:
    avg_tokens: float
    avg_entities: float
    pct_singletons: float

    def as_dict(self) -> dict[str, float]:
        return {
            "avg_tokens": self.avg_tokens,
            "avg_entities": self.avg_entities,
            "pct_singletons": self.pct_singletons,
        }


def corpus_statistics(docs: Sequence[Document]) -> CorpusStatistics:
    """Per-document averages: token count, entity count, singleton percentage.

    ``pct_singletons`` is the mean over documents of the fraction of clusters
    with exactly one mention, in percent; documents without clusters are
    excluded from that mean.
    """
    if not docs:
        raise CorpusError("corpus_statistics requires a non-empty document list")
    avg_tokens = sum(len(d) for d in docs) / len(docs)
    avg_entities = sum(len(d.gold_clusters) for d in docs) / len(docs)
    fractions = [
        sum(c.is_singleton for c in d.gold_clusters) / len(d.gold_clusters)
        for d in docs
        if d.gold_clusters
    ]
    pct = 100.0 * sum(fractions) / len(fractions) if fractions else 0.0
    return CorpusStatistics(avg_tokens=avg_tokens, avg_entities=avg_entities, pct_singletons=pct)


def holdout_split(
    docs: Sequence[Document], fraction: float, seed: int
) -> tuple[list[Document], list[Document]]:
    """Deterministically hold out ``ceil(fraction * N)`` documents as a dev set.

    Selection uses a seeded shuffle; both splits keep the original document
    order. Splits are disjoint and their union is the input.
    """
    if not 0 < fraction < 1:
        raise CorpusError(f"holdout fraction must be in (0, 1), got {fraction}")
    n_dev = math.ceil(fraction * len(docs))
    indices = list(range(len(docs)))
    random.Random(seed).shuffle(indices)
    dev_idx = set(indices[:n_dev])
    train = [d for i, d in enumerate(docs) if i not in dev_idx]
    dev = [d for i, d in enumerate(docs) if i in dev_idx]
    return train, dev


# ---------------------------------------------------------------------------
# canonical JSON (cache format); round-trips exactly


def document_to_dict(doc: Document, schema: RelationSchema) -> dict:
    sents: list[list[str]] = []
    for tok in doc.tokens:
        while len(sents) <= tok.sentence_index:
            sents.append([])
        sents[tok.sentence_index].append(tok.text)
    return {
        "id": doc.id,
        "sentences": sents,
        "clusters": [
            {"id": c.id, "mentions": [[m.start, m.end] for m in c.mentions]}
            for c in doc.gold_clusters
        ],
        "relations": [
            {
                "head": t.head,
                "tail": t.tail,
                "relation": schema.name(t.relation),
                "evidence": list(t.evidence) if t.evidence is not None else None,
            }
            for t in doc.gold_relations
        ],
    }


def document_from_dict(data: dict, schema: RelationSchema) -> Document:
    clusters = tuple(
        EntityCluster(id=c["id"], mentions=tuple(Span(m[0], m[1]) for m in c["mentions"]))
        for c in data["clusters"]
    )
    relations = tuple(
        RelationTriple(
            head=r["head"],
            tail=r["tail"],
            relation=schema.index(r["relation"]),
            evidence=tuple(r["evidence"]) if r.get("evidence") is not None else None,
        )
        for r in data["relations"]
    )
    return Document(
        id=data["id"],
        tokens=make_tokens(data["sentences"]),
        gold_clusters=clusters,
        gold_relations=relations,
    )


def save_corpus(path: str | Path, docs: Sequence[Document], schema: RelationSchema) -> None:
    payload = {
        "relation_types": list(schema.types),
        "documents": [document_to_dict(d, schema) for d in docs],
    }
    Path(path).write_text(json.dumps(payload))


def load_corpus(path: str | Path) -> tuple[list[Document], RelationSchema]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise CorpusError(f"malformed JSON in {path}: {e}") from e
    schema = RelationSchema(types=tuple(payload["relation_types"]))
    docs = [document_from_dict(d, schema) for d in payload["documents"]]
    return docs, schema


def load_any(path: str | Path, schema: RelationSchema | None = None):
    """Dispatch on corpus layout: directories load as DWIE annotation folders,
    files as canonical JSON if they carry the cache header, else as DocRED."""
    path = Path(path)
    if path.is_dir():
        return load_dwie(path, schema)
    head = json.loads(path.read_text())
    if isinstance(head, dict) and "documents" in head:
        docs, found = load_corpus(path)
        return docs, (schema or found)
    return load_docred(path, schema)
