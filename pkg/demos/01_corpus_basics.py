"""Build a synthetic corpus, inspect its documents, split it and cache it.

Run: python demos/01_corpus_basics.py
"""

import tempfile
from pathlib import Path

from docjoint import corpus_statistics, generate_toy_corpus, holdout_split, load_corpus, save_corpus

docs, schema = generate_toy_corpus(n_docs=20, seed=0)
print(f"generated {len(docs)} documents, relation schema: {schema.types}")

doc = docs[0]
print(f"\ndocument {doc.id}: {len(doc)} tokens, {len(doc.gold_clusters)} entities, "
      f"{len(doc.gold_relations)} gold triples")
print("sentence boundaries:", doc.sentence_bounds())
for cluster in doc.gold_clusters:
    surfaces = {doc.span_text(m) for m in cluster.mentions}
    kind = "singleton" if cluster.is_singleton else f"{len(cluster)} mentions"
    print(f"  entity {cluster.id}: {kind}, surface {surfaces}")
for triple in doc.gold_relations:
    print(f"  triple: {triple.head} --{schema.name(triple.relation)}--> {triple.tail}")

stats = corpus_statistics(docs)
print(f"\ncorpus averages: {stats.avg_tokens:.1f} tokens, {stats.avg_entities:.1f} entities, "
      f"{stats.pct_singletons:.1f}% singletons")

train, dev = holdout_split(docs, fraction=0.1, seed=13)
print(f"holdout split: {len(train)} train / {len(dev)} dev (ceil(0.1 * {len(docs)}))")

with tempfile.TemporaryDirectory() as tmp:
    cache = Path(tmp) / "corpus.json"
    save_corpus(cache, docs, schema)
    reloaded, _ = load_corpus(cache)
    print(f"cache round trip: {'exact' if reloaded == docs else 'MISMATCH'} "
          f"({cache.stat().st_size} bytes)")
