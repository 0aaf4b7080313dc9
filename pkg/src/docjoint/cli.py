"""Command-line interface: train, predict, score and stats.

Data directories hold one entry per split: ``<split>.json`` (DocRED-format
or canonical cache JSON), ``<split>_annotated.json`` (DocRED's training file
name) or a ``<split>/`` subdirectory of DWIE-style annotation files. The
``DOCJOINT_DATA`` and ``DOCJOINT_OUT`` environment variables override the
corresponding path arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import RelationSchema, corpus_statistics, holdout_split
from .harness import (
    SettingConfig,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from .metrics import FactIndex, evaluate_predictions, load_predictions, save_predictions

logger = logging.getLogger(__name__)


def _resolve_split(data_dir: Path, split: str) -> Path | None:
    for candidate in (
        data_dir / f"{split}.json",
        data_dir / f"{split}_annotated.json",
        data_dir / split,
    ):
        if candidate.exists():
            return candidate
    return None


def _load_split(
    data_dir: Path, split: str, schema: RelationSchema | None = None
):
    path = _resolve_split(data_dir, split)
    if path is None:
        return None, schema
    docs, found = corpus_mod.load_any(path, schema)
    return docs, (schema or found)


def _data_dir(args) -> Path:
    data = os.environ.get("DOCJOINT_DATA", args.data)
    if data is None:
        sys.exit("no data directory: pass --data or set DOCJOINT_DATA")
    return Path(data)


def _out_dir(args) -> Path:
    out = Path(os.environ.get("DOCJOINT_OUT", args.out))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    config = SettingConfig.from_file(args.config)
    if args.setting:
        config = config.with_setting(args.setting)
    data_dir = _data_dir(args)
    train_docs, schema = _load_split(data_dir, "train")
    if train_docs is None:
        sys.exit(f"no train split found under {data_dir}")
    dev_docs, schema = _load_split(data_dir, "dev", schema)
    if dev_docs is None and not args.final and config.dev_fraction > 0:
        train_docs, dev_docs = holdout_split(
            train_docs, config.dev_fraction, config.split_seed
        )
        logger.info(
            "no dev split on disk: held out %d documents (fraction %.2f)",
            len(dev_docs),
            config.dev_fraction,
        )
    if args.final:
        dev_docs = None  # retrain on everything, keep the final epoch

    result = train(config, schema, train_docs, dev_docs)
    out = _out_dir(args)
    ckpt = out / f"{config.setting}.ckpt"
    save_checkpoint(ckpt, result, schema)
    (out / f"{config.setting}.history.json").write_text(json.dumps(result.history, indent=2))
    print(
        f"trained setting={config.setting} seed={result.seed} "
        f"best_epoch={result.best_epoch} dev_re_f1={result.best_dev_re_f1:.4f}"
    )
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_predict(args) -> int:
    model, config, schema, _ = load_checkpoint(args.checkpoint)
    data_dir = _data_dir(args)
    docs, _ = _load_split(data_dir, args.split, schema)
    if docs is None:
        sys.exit(f"no {args.split!r} split found under {data_dir}")
    predictions = predict(model, docs)
    save_predictions(args.out, predictions)
    print(f"wrote {len(predictions)} document predictions to {args.out}")
    return 0


def _load_fact_index(path: Path, schema: RelationSchema) -> FactIndex:
    if path.is_file():
        payload = json.loads(path.read_text())
        if isinstance(payload, dict) and "facts" in payload:
            return FactIndex.load(path)
    docs, _ = corpus_mod.load_any(path, schema)
    return FactIndex.from_documents(docs, schema)


def cmd_score(args) -> int:
    gold_docs, schema = corpus_mod.load_any(Path(args.gold))
    predictions = load_predictions(args.pred)
    fact_index = None
    if args.fact_index:
        fact_index = _load_fact_index(Path(args.fact_index), schema)
    report = evaluate_predictions(predictions, gold_docs, schema, fact_index)
    print(report.table())
    if args.out:
        Path(args.out).write_text(json.dumps(report.as_dict(), indent=2))
        print(f"report written to {args.out}")
    return 0


def cmd_stats(args) -> int:
    data_dir = _data_dir(args)
    schema = None
    all_docs = []
    rows = []
    for split in ("train", "dev", "test"):
        docs, schema = _load_split(data_dir, split, schema)
        if docs:
            stats = corpus_statistics(docs)
            rows.append((split, len(docs), stats))
            all_docs.extend(docs)
    if not all_docs:
        # a single corpus file rather than a split directory
        docs, schema = corpus_mod.load_any(data_dir)
        rows.append(("all", len(docs), corpus_statistics(docs)))
        all_docs = docs
    elif len(rows) > 1:
        rows.append(("all", len(all_docs), corpus_statistics(all_docs)))
    print(f"{'split':<8} {'docs':>6} {'avg tokens':>11} {'avg entities':>13} {'% singleton':>12}")
    for split, n, stats in rows:
        print(
            f"{split:<8} {n:>6} {stats.avg_tokens:>11.1f} "
            f"{stats.avg_entities:>13.1f} {stats.pct_singletons:>12.1f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docjoint",
        description="End-to-end document-level joint information extraction",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one setting")
    p_train.add_argument("--config", required=True, help="YAML config file")
    p_train.add_argument("--data", help="data directory (or DOCJOINT_DATA)")
    p_train.add_argument("--setting", choices=("pipeline", "joint", "joint_m", "gp", "gc"))
    p_train.add_argument("--out", default="runs", help="output directory (or DOCJOINT_OUT)")
    p_train.add_argument(
        "--final",
        action="store_true",
        help="retrain on the full training set without a dev holdout",
    )
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="run a checkpoint over a split")
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--data", help="data directory (or DOCJOINT_DATA)")
    p_pred.add_argument("--split", default="dev")
    p_pred.add_argument("--out", required=True, help="prediction JSON path")
    p_pred.set_defaults(func=cmd_predict)

    p_score = sub.add_parser("score", help="score a prediction file against gold")
    p_score.add_argument("--pred", required=True, help="prediction JSON")
    p_score.add_argument("--gold", required=True, help="gold corpus (file or DWIE directory)")
    p_score.add_argument(
        "--fact-index",
        help="training corpus or saved fact index for the Ign relation metric",
    )
    p_score.add_argument("--out", help="also write the report as JSON")
    p_score.set_defaults(func=cmd_score)

    p_stats = sub.add_parser("stats", help="corpus statistics")
    p_stats.add_argument("--data", help="data directory or corpus file (or DOCJOINT_DATA)")
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
