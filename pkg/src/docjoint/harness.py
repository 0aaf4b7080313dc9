"""Training orchestration for the five multi-task settings.

``build_model`` composes the pieces per setting:

* ``pipeline`` — two fully separate models (own encoders): a coreference
  model and an entity-level relation model fed with its clusters.
* ``joint`` — one shared encoder; coreference plus entity-level relation
  scoring over pooled cluster embeddings, jointly trained.
* ``joint_m`` — shared encoder with all scoring on mention level; entity
  relation scores are the mean over mention-pair scores at decode time.
* ``gp`` — joint_m plus one round of per-type graph propagation applied to
  the candidate embeddings before coreference scoring.
* ``gc`` — joint_m plus the graph-compatibility head: local-graph distances
  interpolate into the coreference scores and train with a contrastive loss.

Training uses AdamW with separate encoder/task learning rates and linear
warmup, selects the best checkpoint by dev relation F1, and is bitwise
reproducible on CPU for a fixed seed.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import yaml
from torch import Tensor, nn

from . import coref as coref_ops
from . import relation as rel_ops
from .corpus import Document, EntityCluster, RelationSchema, Span
from .encoding import (
    CandidateSet,
    DocumentEncoder,
    MentionScorer,
    ToyEncoder,
    TransformerDocumentEncoder,
    enumerate_spans,
    score_and_prune,
    span_embeddings,
)
from .interaction import (
    CompatibilityHead,
    PropagationLayer,
    contrastive_loss,
    contrastive_pairs,
    interpolate_coref,
)
from .metrics import (
    DocumentPrediction,
    EvaluationReport,
    PredictedTriple,
    evaluate_predictions,
)

logger = logging.getLogger(__name__)

SETTINGS = ("pipeline", "joint", "joint_m", "gp", "gc")


class ConfigError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class SettingConfig:
    """Full hyperparameter set for one experiment."""

    setting: str = "joint_m"

    # encoder
    encoder: str = "toy"  # "toy" | "transformer"
    encoder_name: str | None = None  # huggingface model name for "transformer"
    encoder_dim: int = 32
    encoder_layers: int = 2
    vocab_buckets: int = 1024
    max_input_length: int = 512  # tokens for toy, subtokens for transformer

    # mention candidates
    max_span_width: int = 10
    gamma_m: float = 0.4
    candidate_cap: int = 512
    within_sentences: bool = True

    # scoring heads
    mention_hidden: int = 64
    prior_hidden: int = 64
    rel_proj_dim: int | None = None

    # graph propagation (gp)
    prop_init: str = "zeros"

    # graph compatibility (gc)
    lambda_gc: float = 1e-3
    margin: float = 2.0
    prune_k: int = 24
    beta_init: float | None = None

    # losses
    bce_weight: float = 1.0
    w_coref: float = 1.0
    w_relation: float = 1.0
    w_contrastive: float = 1.0

    # optimization
    encoder_lr: float = 5e-5
    task_lr: float = 2e-4
    batch_size: int = 4
    epochs: int = 72
    warmup_ratio: float = 0.1
    weight_decay: float = 0.01
    grad_clip: float | None = 1.0
    seeds: tuple[int, ...] = (0,)
    eval_every: int = 1

    # data handling
    dev_fraction: float = 0.1
    split_seed: int = 13

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ConfigError(f"unknown setting {self.setting!r}; expected one of {SETTINGS}")
        if self.encoder not in ("toy", "transformer"):
            raise ConfigError(f"unknown encoder {self.encoder!r}")
        if self.encoder == "transformer" and not self.encoder_name:
            raise ConfigError("encoder 'transformer' requires encoder_name")
        if not 0 < self.gamma_m:
            raise ConfigError("gamma_m must be positive")
        if self.max_span_width < 1 or self.candidate_cap < 1:
            raise ConfigError("max_span_width and candidate_cap must be >= 1")
        if self.setting == "gc":
            if self.lambda_gc < 0:
                raise ConfigError("gc requires lambda_gc >= 0")
            if self.margin <= 0:
                raise ConfigError("gc requires margin > 0")
            if self.prune_k < 1:
                raise ConfigError("gc requires prune_k >= 1")
        if self.setting == "gp" and self.prop_init not in ("zeros", "normal"):
            raise ConfigError("gp requires prop_init of 'zeros' or 'normal'")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        self.seeds = tuple(int(s) for s in self.seeds)

    @classmethod
    def from_dict(cls, data: dict) -> "SettingConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "SettingConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping of config keys")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        return data

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]

    def with_setting(self, setting: str) -> "SettingConfig":
        return replace(self, setting=setting)


def set_all_seeds(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


# ---------------------------------------------------------------------------
# model composition


@dataclass
class DocumentOutput:
    """Forward-pass tensors for one document (pre-decoding)."""

    candidates: CandidateSet
    coref_scores: Tensor  # final matrix consumed by cluster decoding
    mention_scores: Tensor  # scores consumed by singleton decoding / BCE
    token_vectors: Tensor
    rel_scores: Tensor | None = None  # mention-level (n, n, R+1)
    compat_scores: Tensor | None = None  # gc distance matrix (n, n)


def _build_encoder(config: SettingConfig, seed: int) -> DocumentEncoder:
    if config.encoder == "toy":
        return ToyEncoder(
            dim=config.encoder_dim,
            vocab_buckets=config.vocab_buckets,
            max_input_length=config.max_input_length,
            n_layers=config.encoder_layers,
            seed=seed,
        )
    return TransformerDocumentEncoder(
        model_name=config.encoder_name, max_subtokens=config.max_input_length
    )


def _clusters_in_bounds(doc: Document, limit: int) -> list[EntityCluster]:
    """Gold clusters restricted to mentions inside the encoded prefix;
    clusters left without mentions are dropped (their relations with them)."""
    kept = []
    for c in doc.gold_clusters:
        mentions = tuple(m for m in c.mentions if m.end < limit)
        if mentions:
            kept.append(EntityCluster(id=c.id, mentions=mentions))
    return kept


class _ModelBase(nn.Module):
    """Shared helpers for candidate generation and decoding."""

    config: SettingConfig
    schema: RelationSchema

    def _candidates(
        self,
        doc: Document,
        token_vectors: Tensor,
        scorer: MentionScorer,
        training: bool,
    ) -> CandidateSet:
        spans = enumerate_spans(doc, self.config.max_span_width, self.config.within_sentences)
        gold = doc.gold_mention_spans if training else None
        return score_and_prune(
            spans,
            token_vectors,
            scorer,
            ratio=self.config.gamma_m,
            cap=self.config.candidate_cap,
            gold_spans=gold,
        )

    def _triples_from_table(
        self, table: rel_ops.EntityScoreTable
    ) -> tuple[PredictedTriple, ...]:
        triples = []
        for h, t, r in rel_ops.decode_relations(table):
            triples.append(
                PredictedTriple(
                    head_cluster_idx=h,
                    tail_cluster_idx=t,
                    relation_name=self.schema.name(r),
                    score=float(table[(h, t)][r].detach()),
                )
            )
        return tuple(triples)


class SharedModel(_ModelBase):
    """Shared-encoder model covering joint, joint_m, gp and gc."""

    def __init__(self, config: SettingConfig, schema: RelationSchema, encoder_seed: int = 0):
        super().__init__()
        self.config = config
        self.schema = schema
        # creation order matters for seed-for-seed parameter equality across
        # settings: shared modules first, setting-specific extras last
        self.encoder = _build_encoder(config, encoder_seed)
        span_dim = 2 * self.encoder.dim
        self.mention_scorer = MentionScorer(span_dim, hidden=config.mention_hidden)
        self.coref_scorer = coref_ops.BilinearCorefScorer(span_dim)
        self.relation_scorer = rel_ops.BiaffineRelationScorer(
            span_dim,
            num_types=len(schema),
            prior_hidden=config.prior_hidden,
            proj_dim=config.rel_proj_dim,
        )
        self.propagation = (
            PropagationLayer(span_dim, len(schema), init=config.prop_init)
            if config.setting == "gp"
            else None
        )
        self.compatibility = (
            CompatibilityHead(
                num_types=len(schema),
                lam=config.lambda_gc,
                margin=config.margin,
                prune_k=config.prune_k,
                beta_init=config.beta_init,
            )
            if config.setting == "gc"
            else None
        )

    @property
    def mention_level(self) -> bool:
        return self.config.setting in ("joint_m", "gp", "gc")

    def encoder_parameters(self):
        return list(self.encoder.parameters())

    def forward_document(self, doc: Document, training: bool = False) -> DocumentOutput:
        token_vectors = self.encoder.encode(doc)
        cands = self._candidates(doc, token_vectors, self.mention_scorer, training)

        rel_scores = None
        compat = None
        emb = cands.embeddings
        m_scores = cands.mention_scores
        if self.mention_level:
            rel_scores = self.relation_scorer(emb)
        if self.propagation is not None and rel_scores is not None:
            emb = self.propagation(emb, rel_scores)
            m_scores = self.mention_scorer(emb)
        s_c = self.coref_scorer(emb, m_scores)
        if self.compatibility is not None and rel_scores is not None and len(cands) > 0:
            compat = self.compatibility(rel_scores)
            s_c = interpolate_coref(s_c, compat, self.compatibility.lam)
        return DocumentOutput(
            candidates=cands,
            coref_scores=s_c,
            mention_scores=m_scores,
            token_vectors=token_vectors,
            rel_scores=rel_scores,
            compat_scores=compat,
        )

    def _entity_level_loss(self, doc: Document, token_vectors: Tensor) -> Tensor:
        clusters = _clusters_in_bounds(doc, token_vectors.shape[0])
        if len(clusters) < 2:
            return token_vectors.sum() * 0.0
        emb = torch.stack(
            [
                rel_ops.pool_entity_embeddings(span_embeddings(list(c.mentions), token_vectors))
                for c in clusters
            ]
        )
        kept_ids = {c.id for c in clusters}
        relations = tuple(
            t for t in doc.gold_relations if t.head in kept_ids and t.tail in kept_ids
        )
        labels = rel_ops.entity_pair_labels(tuple(clusters), relations, len(self.schema))
        return rel_ops.adaptive_threshold_loss(self.relation_scorer(emb), labels)

    def loss_document(self, doc: Document) -> dict[str, Tensor]:
        out = self.forward_document(doc, training=True)
        cfg = self.config
        losses: dict[str, Tensor] = {}
        losses["coref"] = cfg.w_coref * coref_ops.coref_loss(
            out.coref_scores,
            out.mention_scores,
            out.candidates.spans,
            doc.gold_clusters,
            bce_weight=cfg.bce_weight,
        )
        if self.mention_level:
            labels = rel_ops.transfer_labels(
                doc.gold_clusters, doc.gold_relations, out.candidates.spans, len(self.schema)
            )
            losses["relation"] = cfg.w_relation * rel_ops.adaptive_threshold_loss(
                out.rel_scores, labels
            )
        else:
            losses["relation"] = cfg.w_relation * self._entity_level_loss(
                doc, out.token_vectors
            )
        if self.compatibility is not None:
            pairs, labels = contrastive_pairs(out.candidates.spans, doc.gold_clusters)
            if pairs and out.compat_scores is not None:
                idx = torch.tensor(pairs, dtype=torch.long)
                distances = torch.clamp(out.compat_scores[idx[:, 0], idx[:, 1]], min=0.0)
                losses["contrastive"] = cfg.w_contrastive * contrastive_loss(
                    distances, labels.to(distances.dtype), self.compatibility.margin
                )
            else:
                losses["contrastive"] = out.coref_scores.sum() * 0.0
        losses["total"] = sum(losses.values())
        return losses

    def predict_document(self, doc: Document) -> DocumentPrediction:
        out = self.forward_document(doc, training=False)
        clusters = coref_ops.decode_clusters(
            out.coref_scores, out.mention_scores, out.candidates.spans
        )
        if self.mention_level:
            table = rel_ops.aggregate_entity_scores(
                out.rel_scores, clusters, out.candidates.spans
            )
        else:
            table = self._entity_table_from_clusters(clusters, out.token_vectors)
        return DocumentPrediction(
            doc_id=doc.id,
            clusters=tuple(tuple(c) for c in clusters),
            triples=self._triples_from_table(table),
        )

    def _entity_table_from_clusters(
        self, clusters: list[tuple[Span, ...]], token_vectors: Tensor
    ) -> rel_ops.EntityScoreTable:
        limit = token_vectors.shape[0]
        embeddable = [
            (i, [m for m in c if m.end < limit]) for i, c in enumerate(clusters)
        ]
        embeddable = [(i, ms) for i, ms in embeddable if ms]
        if len(embeddable) < 2:
            return {}
        emb = torch.stack(
            [
                rel_ops.pool_entity_embeddings(span_embeddings(ms, token_vectors))
                for _, ms in embeddable
            ]
        )
        scores = self.relation_scorer(emb)
        table: rel_ops.EntityScoreTable = {}
        for a, (i, _) in enumerate(embeddable):
            for b, (j, _) in enumerate(embeddable):
                if i != j:
                    table[(i, j)] = scores[a, b]
        return table


class PipelineModel(_ModelBase):
    """Independent coreference and relation models with separate encoders.

    Relation training consumes gold clusters; at prediction time the relation
    model consumes whatever clusters the coreference model produced.
    """

    def __init__(self, config: SettingConfig, schema: RelationSchema, encoder_seed: int = 0):
        super().__init__()
        self.config = config
        self.schema = schema
        self.coref_encoder = _build_encoder(config, encoder_seed)
        span_dim = 2 * self.coref_encoder.dim
        self.mention_scorer = MentionScorer(span_dim, hidden=config.mention_hidden)
        self.coref_scorer = coref_ops.BilinearCorefScorer(span_dim)
        self.re_encoder = _build_encoder(config, encoder_seed + 1)
        self.relation_scorer = rel_ops.BiaffineRelationScorer(
            span_dim,
            num_types=len(schema),
            prior_hidden=config.prior_hidden,
            proj_dim=config.rel_proj_dim,
        )

    def encoder_parameters(self):
        return list(self.coref_encoder.parameters()) + list(self.re_encoder.parameters())

    def forward_document(self, doc: Document, training: bool = False) -> DocumentOutput:
        token_vectors = self.coref_encoder.encode(doc)
        cands = self._candidates(doc, token_vectors, self.mention_scorer, training)
        s_c = self.coref_scorer(cands.embeddings, cands.mention_scores)
        return DocumentOutput(
            candidates=cands,
            coref_scores=s_c,
            mention_scores=cands.mention_scores,
            token_vectors=token_vectors,
        )

    def loss_document(self, doc: Document) -> dict[str, Tensor]:
        out = self.forward_document(doc, training=True)
        cfg = self.config
        losses = {
            "coref": cfg.w_coref
            * coref_ops.coref_loss(
                out.coref_scores,
                out.mention_scores,
                out.candidates.spans,
                doc.gold_clusters,
                bce_weight=cfg.bce_weight,
            )
        }
        re_vectors = self.re_encoder.encode(doc)
        clusters = _clusters_in_bounds(doc, re_vectors.shape[0])
        if len(clusters) >= 2:
            emb = torch.stack(
                [
                    rel_ops.pool_entity_embeddings(
                        span_embeddings(list(c.mentions), re_vectors)
                    )
                    for c in clusters
                ]
            )
            kept = {c.id for c in clusters}
            rels = tuple(
                t for t in doc.gold_relations if t.head in kept and t.tail in kept
            )
            labels = rel_ops.entity_pair_labels(tuple(clusters), rels, len(self.schema))
            losses["relation"] = cfg.w_relation * rel_ops.adaptive_threshold_loss(
                self.relation_scorer(emb), labels
            )
        else:
            losses["relation"] = re_vectors.sum() * 0.0
        losses["total"] = sum(losses.values())
        return losses

    def predict_document(self, doc: Document) -> DocumentPrediction:
        out = self.forward_document(doc, training=False)
        clusters = coref_ops.decode_clusters(
            out.coref_scores, out.mention_scores, out.candidates.spans
        )
        re_vectors = self.re_encoder.encode(doc)
        limit = re_vectors.shape[0]
        embeddable = [(i, [m for m in c if m.end < limit]) for i, c in enumerate(clusters)]
        embeddable = [(i, ms) for i, ms in embeddable if ms]
        table: rel_ops.EntityScoreTable = {}
        if len(embeddable) >= 2:
            emb = torch.stack(
                [
                    rel_ops.pool_entity_embeddings(span_embeddings(ms, re_vectors))
                    for _, ms in embeddable
                ]
            )
            scores = self.relation_scorer(emb)
            for a, (i, _) in enumerate(embeddable):
                for b, (j, _) in enumerate(embeddable):
                    if i != j:
                        table[(i, j)] = scores[a, b]
        return DocumentPrediction(
            doc_id=doc.id,
            clusters=tuple(tuple(c) for c in clusters),
            triples=self._triples_from_table(table),
        )


SettingModel = SharedModel | PipelineModel


def build_model(
    config: SettingConfig, schema: RelationSchema, encoder_seed: int = 0
) -> SettingModel:
    """Compose the model for the configured setting."""
    if config.setting == "pipeline":
        return PipelineModel(config, schema, encoder_seed)
    return SharedModel(config, schema, encoder_seed)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: SettingModel
    config: SettingConfig
    seed: int
    best_epoch: int
    best_dev_re_f1: float
    history: list[dict] = field(default_factory=list)
    optimizer_state: dict | None = None


def _make_optimizer(model: SettingModel, config: SettingConfig) -> torch.optim.AdamW:
    encoder_params = model.encoder_parameters()
    encoder_ids = {id(p) for p in encoder_params}
    task_params = [p for p in model.parameters() if id(p) not in encoder_ids]
    return torch.optim.AdamW(
        [
            {"params": encoder_params, "lr": config.encoder_lr},
            {"params": task_params, "lr": config.task_lr},
        ],
        weight_decay=config.weight_decay,
    )


def _warmup_schedule(optimizer, total_steps: int, warmup_ratio: float):
    warmup = max(1, int(math.ceil(warmup_ratio * total_steps)))
    return torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: min(1.0, (step + 1) / warmup)
    )


def predict(model: SettingModel, docs: Sequence[Document]) -> list[DocumentPrediction]:
    model.eval()
    with torch.no_grad():
        return [model.predict_document(doc) for doc in docs]


def evaluate(
    model: SettingModel, docs: Sequence[Document], schema: RelationSchema
) -> EvaluationReport:
    return evaluate_predictions(predict(model, docs), docs, schema)


def train_single_seed(
    config: SettingConfig,
    schema: RelationSchema,
    train_docs: Sequence[Document],
    dev_docs: Sequence[Document] | None,
    seed: int,
) -> TrainResult:
    """Train one model; the best dev-RE-F1 checkpoint wins (final epoch when
    no dev set is given). Bitwise reproducible for a fixed seed on CPU."""
    set_all_seeds(seed)
    model = build_model(config, schema, encoder_seed=seed)
    optimizer = _make_optimizer(model, config)
    batches_per_epoch = max(1, math.ceil(len(train_docs) / config.batch_size))
    scheduler = _warmup_schedule(
        optimizer, config.epochs * batches_per_epoch, config.warmup_ratio
    )
    shuffler = random.Random(seed)

    best_f1 = -1.0
    best_epoch = -1
    best_state = None
    history: list[dict] = []
    for epoch in range(config.epochs):
        model.train()
        order = list(range(len(train_docs)))
        shuffler.shuffle(order)
        epoch_losses: dict[str, float] = {}
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            total = None
            for di in batch:
                losses = model.loss_document(train_docs[di])
                if not torch.isfinite(losses["total"]):
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}, document "
                        f"{train_docs[di].id!r}: "
                        + ", ".join(f"{k}={float(v):.4g}" for k, v in losses.items())
                    )
                total = losses["total"] if total is None else total + losses["total"]
                for k, v in losses.items():
                    epoch_losses[k] = epoch_losses.get(k, 0.0) + float(v.detach())
            (total / len(batch)).backward()
            if config.grad_clip:
                nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            scheduler.step()

        record = {"epoch": epoch, **{f"loss_{k}": v for k, v in epoch_losses.items()}}
        if dev_docs is not None and (epoch + 1) % config.eval_every == 0:
            report = evaluate(model, dev_docs, schema)
            record["dev_re_f1"] = report.relation.f1
            record["dev_coref_avg_f1"] = report.coref_avg_f1
            if report.relation.f1 > best_f1:
                best_f1 = report.relation.f1
                best_epoch = epoch
                best_state = copy.deepcopy(model.state_dict())
        history.append(record)
        logger.info(
            "seed %d epoch %d: %s",
            seed,
            epoch,
            ", ".join(f"{k}={v:.4f}" for k, v in record.items() if k != "epoch"),
        )

    if best_state is not None:
        model.load_state_dict(best_state)
    else:
        best_epoch = config.epochs - 1
        if dev_docs is not None:
            best_f1 = evaluate(model, dev_docs, schema).relation.f1
    return TrainResult(
        model=model,
        config=config,
        seed=seed,
        best_epoch=best_epoch,
        best_dev_re_f1=best_f1,
        history=history,
        optimizer_state=optimizer.state_dict(),
    )


def train(
    config: SettingConfig,
    schema: RelationSchema,
    train_docs: Sequence[Document],
    dev_docs: Sequence[Document] | None = None,
) -> TrainResult:
    """Seed sweep: train per seed in ``config.seeds`` and keep the run with
    the best dev relation F1 (the first run when no dev set is given)."""
    best: TrainResult | None = None
    for seed in config.seeds:
        result = train_single_seed(config, schema, train_docs, dev_docs, seed)
        logger.info("seed %d: best dev RE F1 %.4f", seed, result.best_dev_re_f1)
        if best is None or result.best_dev_re_f1 > best.best_dev_re_f1:
            best = result
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# checkpointing

CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, result: TrainResult, schema: RelationSchema) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "config": result.config.to_dict(),
        "config_hash": result.config.hash(),
        "schema": list(schema.types),
        "model_state": result.model.state_dict(),
        "optimizer_state": result.optimizer_state,
        "seed": result.seed,
        "best_epoch": result.best_epoch,
        "best_dev_re_f1": result.best_dev_re_f1,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> tuple[SettingModel, SettingConfig, RelationSchema, dict]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise FileNotFoundError(f"checkpoint not found: {path}") from None
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigError(
            f"unsupported checkpoint version {payload.get('format_version')!r}"
        )
    config = SettingConfig.from_dict(payload["config"])
    if config.hash() != payload["config_hash"]:
        raise ConfigError("checkpoint config hash mismatch")
    schema = RelationSchema(types=tuple(payload["schema"]))
    model = build_model(config, schema, encoder_seed=payload.get("seed", 0))
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model, config, schema, payload
