"""Entity-centric evaluation: mention F1, coreference metrics (MUC, B3,
CEAF_phi4 and their average), entity-level relation F1 with the
train-fact-excluding variant, and the entity-ID-mapping postprocessor that
bridges predicted clusters to gold entity ids.

All corpus-level numbers are micro-averaged: numerators and denominators
accumulate over documents before the final division.
"""

from __future__ import annotations

import json
from collections.abc import Collection, Hashable, Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import Document, EntityCluster, RelationSchema, Span


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, p_num: float, p_den: float, r_num: float, r_den: float) -> "PRF":
        p = p_num / p_den if p_den > 0 else 0.0
        r = r_num / r_den if r_den > 0 else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(precision=p, recall=r, f1=f)

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


Clustering = Sequence[Collection[Hashable]]


def _as_sets(clusters: Clustering) -> list[set]:
    return [set(c) for c in clusters]


def _mention_map(clusters: list[set]) -> dict:
    return {m: i for i, c in enumerate(clusters) for m in c}


# ---------------------------------------------------------------------------
# coreference metrics (document-level counts + PRF wrappers)


def _muc_counts(predicted: Clustering, gold: Clustering) -> tuple[float, float, float, float]:
    pred, gld = _as_sets(predicted), _as_sets(gold)

    def vilain(clusters: list[set], other_map: dict) -> tuple[int, int]:
        num = den = 0
        for c in clusters:
            touched = {other_map[m] for m in c if m in other_map}
            unaligned = sum(1 for m in c if m not in other_map)
            num += len(c) - len(touched) - unaligned
            den += len(c) - 1
        return num, den

    p_num, p_den = vilain(pred, _mention_map(gld))
    r_num, r_den = vilain(gld, _mention_map(pred))
    return p_num, p_den, r_num, r_den


def _b_cubed_counts(predicted: Clustering, gold: Clustering) -> tuple[float, float, float, float]:
    pred, gld = _as_sets(predicted), _as_sets(gold)

    def side(a_clusters: list[set], b_clusters: list[set]) -> tuple[float, int]:
        b_map = _mention_map(b_clusters)
        total = 0.0
        count = 0
        for c in a_clusters:
            for m in c:
                other = b_clusters[b_map[m]] if m in b_map else set()
                total += len(c & other) / len(c)
                count += 1
        return total, count

    p_num, p_den = side(pred, gld)
    r_num, r_den = side(gld, pred)
    return p_num, p_den, r_num, r_den


def phi4(a: Collection, b: Collection) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return 2 * len(a & b) / (len(a) + len(b))


def _ceaf_counts(predicted: Clustering, gold: Clustering) -> tuple[float, float, float, float]:
    pred, gld = _as_sets(predicted), _as_sets(gold)
    if not pred or not gld:
        return 0.0, len(pred), 0.0, len(gld)
    sim = np.array([[phi4(g, p) for p in pred] for g in gld])
    rows, cols = linear_sum_assignment(-sim)
    total = float(sim[rows, cols].sum())
    return total, len(pred), total, len(gld)


def muc(predicted: Clustering, gold: Clustering) -> PRF:
    """Link-based MUC score; mentions absent from the other side partition as
    singletons (the system-mention extension of the Vilain counts)."""
    return PRF.from_counts(*_muc_counts(predicted, gold))


def b_cubed(predicted: Clustering, gold: Clustering) -> PRF:
    """Per-mention B3; spurious mentions count against precision, missing ones
    against recall, each with empty intersection."""
    return PRF.from_counts(*_b_cubed_counts(predicted, gold))


def ceaf_phi4(predicted: Clustering, gold: Clustering) -> PRF:
    """Entity-based CEAF under the phi4 similarity with optimal one-to-one
    cluster alignment."""
    return PRF.from_counts(*_ceaf_counts(predicted, gold))


def coref_avg_f1(predicted: Clustering, gold: Clustering) -> float:
    """Unweighted mean of the MUC, B3 and CEAF_phi4 F1 scores."""
    return (muc(predicted, gold).f1 + b_cubed(predicted, gold).f1 + ceaf_phi4(predicted, gold).f1) / 3


# ---------------------------------------------------------------------------
# predictions


@dataclass(frozen=True)
class PredictedTriple:
    head_cluster_idx: int
    tail_cluster_idx: int
    relation_name: str
    score: float | None = None

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.head_cluster_idx, self.tail_cluster_idx, self.relation_name)


@dataclass(frozen=True)
class DocumentPrediction:
    doc_id: str
    clusters: tuple[tuple[Span, ...], ...] = ()
    triples: tuple[PredictedTriple, ...] = ()

    @property
    def mention_spans(self) -> set[Span]:
        return {m for c in self.clusters for m in c}


def predictions_to_json(predictions: Sequence[DocumentPrediction]) -> dict:
    return {
        "documents": [
            {
                "doc_id": p.doc_id,
                "clusters": [[[m.start, m.end] for m in c] for c in p.clusters],
                "triples": [
                    {
                        "head_cluster_idx": t.head_cluster_idx,
                        "tail_cluster_idx": t.tail_cluster_idx,
                        "relation_name": t.relation_name,
                        **({"score": t.score} if t.score is not None else {}),
                    }
                    for t in p.triples
                ],
            }
            for p in predictions
        ]
    }


def predictions_from_json(payload: dict) -> list[DocumentPrediction]:
    out = []
    for entry in payload["documents"]:
        clusters = tuple(
            tuple(Span(m[0], m[1]) for m in cluster) for cluster in entry["clusters"]
        )
        triples = tuple(
            PredictedTriple(
                head_cluster_idx=t["head_cluster_idx"],
                tail_cluster_idx=t["tail_cluster_idx"],
                relation_name=t["relation_name"],
                score=t.get("score"),
            )
            for t in entry["triples"]
        )
        out.append(DocumentPrediction(doc_id=entry["doc_id"], clusters=clusters, triples=triples))
    return out


def save_predictions(path: str | Path, predictions: Sequence[DocumentPrediction]) -> None:
    Path(path).write_text(json.dumps(predictions_to_json(predictions)))


def load_predictions(path: str | Path) -> list[DocumentPrediction]:
    return predictions_from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# mention extraction


def mention_f1(
    predicted: Sequence[set[Span]], gold: Sequence[set[Span]]
) -> PRF:
    """Micro-averaged exact-boundary mention F1 over parallel document lists."""
    if len(predicted) != len(gold):
        raise EvaluationError("mention_f1 requires parallel per-document span sets")
    correct = sum(len(p & g) for p, g in zip(predicted, gold))
    n_pred = sum(len(p) for p in predicted)
    n_gold = sum(len(g) for g in gold)
    return PRF.from_counts(correct, n_pred, correct, n_gold)


# ---------------------------------------------------------------------------
# entity-ID mapping and relation F1


def map_entity_ids(
    predicted_clusters: Sequence[Collection[Span]],
    gold_clusters: Sequence[EntityCluster],
) -> list[str]:
    """Gold id per predicted cluster on exact span-set match, else a dummy id.

    Dummy ids never collide with gold ids, so every relation triple attached
    to an unmatched cluster is guaranteed to score as incorrect.
    """
    gold_ids = {c.id for c in gold_clusters}
    by_mentions = {frozenset(c.mentions): c.id for c in gold_clusters}
    mapping = []
    for i, cluster in enumerate(predicted_clusters):
        matched = by_mentions.get(frozenset(cluster))
        if matched is not None:
            mapping.append(matched)
        else:
            dummy = f"__dummy_{i}"
            while dummy in gold_ids:
                dummy = "_" + dummy
            mapping.append(dummy)
    return mapping


class FactIndex:
    """Relational facts seen in training, keyed by entity surface strings.

    A fact is (head mention text, tail mention text, relation name); a triple
    counts as "seen" when any combination of its clusters' mention texts is in
    the index. Used by the Ign variant of relation F1.
    """

    def __init__(self, facts: Iterable[tuple[str, str, str]] = ()):
        self.facts = frozenset(facts)

    @classmethod
    def from_documents(cls, docs: Sequence[Document], schema: RelationSchema) -> "FactIndex":
        facts = set()
        for doc in docs:
            clusters = {c.id: c for c in doc.gold_clusters}
            for triple in doc.gold_relations:
                rel = schema.name(triple.relation)
                heads = {doc.span_text(m) for m in clusters[triple.head].mentions}
                tails = {doc.span_text(m) for m in clusters[triple.tail].mentions}
                facts.update((h, t, rel) for h in heads for t in tails)
        return cls(facts)

    def contains_any(self, head_names: set[str], tail_names: set[str], relation: str) -> bool:
        return any((h, t, relation) in self.facts for h in head_names for t in tail_names)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"facts": sorted(self.facts)}))

    @classmethod
    def load(cls, path: str | Path) -> "FactIndex":
        payload = json.loads(Path(path).read_text())
        return cls(tuple(f) for f in payload["facts"])

    def __len__(self) -> int:
        return len(self.facts)


def relation_f1(
    predictions: Sequence[DocumentPrediction],
    gold_docs: Sequence[Document],
    schema: RelationSchema,
    fact_index: FactIndex | None = None,
) -> tuple[PRF, PRF | None]:
    """Micro entity-level relation F1 after entity-ID mapping.

    A predicted triple is correct iff its mapped head id, mapped tail id and
    relation name all match a gold triple. With a fact index, the Ign variant
    removes train-seen facts from both the correct-prediction and the gold
    counts before recomputing precision and recall.
    """
    by_id = {d.id: d for d in gold_docs}
    n_pred = n_gold = n_correct = 0
    correct_seen = gold_seen = 0
    for pred in predictions:
        doc = by_id.get(pred.doc_id)
        if doc is None:
            raise EvaluationError(f"prediction references unknown document {pred.doc_id!r}")
        mapping = map_entity_ids(pred.clusters, doc.gold_clusters)
        pred_keys = set()
        for t in pred.triples:
            pred_keys.add((mapping[t.head_cluster_idx], mapping[t.tail_cluster_idx], t.relation_name))
        gold_keys = {
            (t.head, t.tail, schema.name(t.relation)) for t in doc.gold_relations
        }
        correct_keys = pred_keys & gold_keys
        n_pred += len(pred_keys)
        n_gold += len(gold_keys)
        n_correct += len(correct_keys)
        if fact_index is not None:
            clusters = {c.id: c for c in doc.gold_clusters}

            def seen(key: tuple[str, str, str]) -> bool:
                heads = {doc.span_text(m) for m in clusters[key[0]].mentions}
                tails = {doc.span_text(m) for m in clusters[key[1]].mentions}
                return fact_index.contains_any(heads, tails, key[2])

            correct_seen += sum(seen(k) for k in correct_keys)
            gold_seen += sum(seen(k) for k in gold_keys)

    overall = PRF.from_counts(n_correct, n_pred, n_correct, n_gold)
    if fact_index is None:
        return overall, None
    ign = PRF.from_counts(
        n_correct - correct_seen,
        n_pred - correct_seen,
        n_correct - correct_seen,
        n_gold - gold_seen,
    )
    return overall, ign


# ---------------------------------------------------------------------------
# full report


@dataclass
class EvaluationReport:
    mention: PRF
    muc: PRF
    b_cubed: PRF
    ceaf_phi4: PRF
    coref_avg_f1: float
    relation: PRF
    relation_ign: PRF | None = None

    def as_dict(self) -> dict:
        out = {
            "mention": self.mention.as_dict(),
            "muc": self.muc.as_dict(),
            "b_cubed": self.b_cubed.as_dict(),
            "ceaf_phi4": self.ceaf_phi4.as_dict(),
            "coref_avg_f1": self.coref_avg_f1,
            "relation": self.relation.as_dict(),
        }
        if self.relation_ign is not None:
            out["relation_ign"] = self.relation_ign.as_dict()
        return out

    def table(self) -> str:
        rows = [
            ("ME", self.mention),
            ("MUC", self.muc),
            ("B3", self.b_cubed),
            ("CEAF_phi4", self.ceaf_phi4),
            ("RE", self.relation),
        ]
        if self.relation_ign is not None:
            rows.append(("RE Ign", self.relation_ign))
        lines = [f"{'metric':<10} {'P':>7} {'R':>7} {'F1':>7}"]
        for name, prf in rows:
            lines.append(
                f"{name:<10} {100 * prf.precision:7.2f} {100 * prf.recall:7.2f} {100 * prf.f1:7.2f}"
            )
        lines.append(f"{'COREF avg':<10} {'':>7} {'':>7} {100 * self.coref_avg_f1:7.2f}")
        return "\n".join(lines)


def evaluate_predictions(
    predictions: Sequence[DocumentPrediction],
    gold_docs: Sequence[Document],
    schema: RelationSchema,
    fact_index: FactIndex | None = None,
) -> EvaluationReport:
    """Corpus-level report over all metrics; documents without a prediction
    entry count as empty predictions."""
    by_id = {p.doc_id: p for p in predictions}
    unknown = set(by_id) - {d.id for d in gold_docs}
    if unknown:
        raise EvaluationError(f"predictions reference unknown documents: {sorted(unknown)[:3]}")

    pred_mentions, gold_mentions = [], []
    counts = {"muc": [0.0] * 4, "b3": [0.0] * 4, "ceaf": [0.0] * 4}
    aligned_preds = []
    for doc in gold_docs:
        pred = by_id.get(doc.id, DocumentPrediction(doc_id=doc.id))
        aligned_preds.append(pred)
        pred_mentions.append(pred.mention_spans)
        gold_mentions.append(doc.gold_mention_spans)
        gold_clusters = [set(c.mentions) for c in doc.gold_clusters]
        pred_clusters = [set(c) for c in pred.clusters]
        for name, fn in (
            ("muc", _muc_counts),
            ("b3", _b_cubed_counts),
            ("ceaf", _ceaf_counts),
        ):
            for i, v in enumerate(fn(pred_clusters, gold_clusters)):
                counts[name][i] += v

    muc_prf = PRF.from_counts(*counts["muc"])
    b3_prf = PRF.from_counts(*counts["b3"])
    ceaf_prf = PRF.from_counts(*counts["ceaf"])
    rel, rel_ign = relation_f1(aligned_preds, gold_docs, schema, fact_index)
    return EvaluationReport(
        mention=mention_f1(pred_mentions, gold_mentions),
        muc=muc_prf,
        b_cubed=b3_prf,
        ceaf_phi4=ceaf_prf,
        coref_avg_f1=(muc_prf.f1 + b3_prf.f1 + ceaf_prf.f1) / 3,
        relation=rel,
        relation_ign=rel_ign,
    )
