"""Full workflow: train, checkpoint, predict to JSON and score against gold,
including the train-fact-excluding relation metric.

Equivalent CLI commands:
    docjoint train   --config configs/toy.yaml --data DATA --out runs
    docjoint predict --checkpoint runs/joint_m.ckpt --data DATA --split dev --out pred.json
    docjoint score   --pred pred.json --gold DATA/dev.json --fact-index DATA/train.json

Run: python demos/06_predict_and_score.py
"""

import tempfile
from pathlib import Path

from docjoint import FactIndex, SettingConfig, generate_toy_corpus
from docjoint.harness import load_checkpoint, predict, save_checkpoint, train_single_seed
from docjoint.metrics import evaluate_predictions, load_predictions, save_predictions

docs, schema = generate_toy_corpus(n_docs=24, seed=1)
train_docs, dev_docs = docs[:20], docs[20:]

config = SettingConfig(
    setting="gc",
    encoder_dim=32,
    encoder_layers=2,
    vocab_buckets=512,
    max_span_width=2,
    candidate_cap=64,
    encoder_lr=3e-3,
    task_lr=3e-3,
    batch_size=4,
    epochs=60,
    weight_decay=0.0,
    grad_clip=5.0,
    eval_every=10,
    prune_k=8,
    seeds=(0,),
)
result = train_single_seed(config, schema, train_docs, dev_docs, seed=0)
print(f"trained gc: best epoch {result.best_epoch}, dev RE F1 {result.best_dev_re_f1:.3f}")

with tempfile.TemporaryDirectory() as tmp:
    ckpt = Path(tmp) / "gc.ckpt"
    save_checkpoint(ckpt, result, schema)
    model, _, _, payload = load_checkpoint(ckpt)
    print(f"checkpoint round trip ok (config hash {payload['config_hash']})")

    predictions = predict(model, dev_docs)
    pred_path = Path(tmp) / "pred.json"
    save_predictions(pred_path, predictions)
    predictions = load_predictions(pred_path)
    n_triples = sum(len(p.triples) for p in predictions)
    print(f"wrote {len(predictions)} document predictions, {n_triples} triples")

    fact_index = FactIndex.from_documents(train_docs, schema)
    report = evaluate_predictions(predictions, dev_docs, schema, fact_index)
    print(f"\n{report.table()}")
    print("\n(dev documents reuse entity surfaces seen in training, so the Ign")
    print(" variant discounts triples whose facts already appeared there)")
