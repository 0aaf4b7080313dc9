"""End-to-end document-level information extraction.

Jointly extracts mentions, coreference clusters and entity-level relation
triples from documents, with five multi-task settings (pipeline, joint,
joint_m, gp, gc) and the matching entity-centric evaluation stack.
"""

from .corpus import (
    CorpusError,
    CorpusStatistics,
    Document,
    EntityCluster,
    RelationSchema,
    RelationTriple,
    Span,
    Token,
    corpus_statistics,
    holdout_split,
    load_corpus,
    load_docred,
    load_dwie,
    save_corpus,
)
from .encoding import (
    CandidateSet,
    DocumentEncoder,
    MentionCandidate,
    MentionScorer,
    ToyEncoder,
    enumerate_spans,
    score_and_prune,
    span_embeddings,
)
from .harness import (
    SettingConfig,
    TrainingDiverged,
    TrainResult,
    build_model,
    evaluate,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from .metrics import (
    PRF,
    DocumentPrediction,
    EvaluationReport,
    FactIndex,
    PredictedTriple,
    b_cubed,
    ceaf_phi4,
    coref_avg_f1,
    evaluate_predictions,
    map_entity_ids,
    mention_f1,
    muc,
    relation_f1,
)
from .synthetic import generate_gc_probe_corpus, generate_toy_corpus

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "CorpusError",
    "CorpusStatistics",
    "Document",
    "DocumentEncoder",
    "DocumentPrediction",
    "EntityCluster",
    "EvaluationReport",
    "FactIndex",
    "MentionCandidate",
    "MentionScorer",
    "PRF",
    "PredictedTriple",
    "RelationSchema",
    "RelationTriple",
    "SettingConfig",
    "Span",
    "Token",
    "ToyEncoder",
    "TrainResult",
    "TrainingDiverged",
    "b_cubed",
    "build_model",
    "ceaf_phi4",
    "coref_avg_f1",
    "corpus_statistics",
    "enumerate_spans",
    "evaluate",
    "evaluate_predictions",
    "generate_gc_probe_corpus",
    "generate_toy_corpus",
    "holdout_split",
    "load_checkpoint",
    "load_corpus",
    "load_docred",
    "load_dwie",
    "map_entity_ids",
    "mention_f1",
    "muc",
    "predict",
    "relation_f1",
    "save_checkpoint",
    "save_corpus",
    "score_and_prune",
    "span_embeddings",
    "train",
]
