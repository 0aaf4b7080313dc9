import json

import pytest

from docjoint.cli import main
from docjoint.corpus import save_corpus
from docjoint.metrics import load_predictions
from docjoint.synthetic import generate_toy_corpus


@pytest.fixture()
def toy_data_dir(tmp_path):
    docs, schema = generate_toy_corpus(n_docs=8, seed=2)
    data = tmp_path / "data"
    data.mkdir()
    save_corpus(data / "train.json", docs[:6], schema)
    save_corpus(data / "dev.json", docs[6:], schema)
    return data


@pytest.fixture()
def toy_config(tmp_path):
    path = tmp_path / "toy.yaml"
    path.write_text(
        "\n".join(
            [
                "setting: joint_m",
                "encoder_dim: 8",
                "encoder_layers: 1",
                "vocab_buckets: 128",
                "max_span_width: 2",
                "candidate_cap: 32",
                "mention_hidden: 8",
                "prior_hidden: 8",
                "encoder_lr: 3.0e-3",
                "task_lr: 3.0e-3",
                "batch_size: 4",
                "epochs: 2",
                "weight_decay: 0.0",
                "prune_k: 6",
                "seeds: [0]",
            ]
        )
    )
    return path


def test_stats_command(toy_data_dir, capsys):
    assert main(["stats", "--data", str(toy_data_dir)]) == 0
    out = capsys.readouterr().out
    assert "train" in out and "dev" in out and "all" in out
    assert "% singleton" in out


def test_stats_env_override(toy_data_dir, capsys, monkeypatch):
    monkeypatch.setenv("DOCJOINT_DATA", str(toy_data_dir))
    assert main(["stats"]) == 0
    assert "train" in capsys.readouterr().out


def test_train_predict_score_workflow(toy_data_dir, toy_config, tmp_path, capsys):
    run_dir = tmp_path / "runs"
    assert (
        main(
            [
                "train",
                "--config",
                str(toy_config),
                "--data",
                str(toy_data_dir),
                "--out",
                str(run_dir),
            ]
        )
        == 0
    )
    ckpt = run_dir / "joint_m.ckpt"
    assert ckpt.exists()
    history = json.loads((run_dir / "joint_m.history.json").read_text())
    assert len(history) == 2
    out = capsys.readouterr().out
    assert "trained setting=joint_m" in out

    pred_path = tmp_path / "pred.json"
    assert (
        main(
            [
                "predict",
                "--checkpoint",
                str(ckpt),
                "--data",
                str(toy_data_dir),
                "--split",
                "dev",
                "--out",
                str(pred_path),
            ]
        )
        == 0
    )
    predictions = load_predictions(pred_path)
    assert len(predictions) == 2
    capsys.readouterr()

    report_path = tmp_path / "report.json"
    assert (
        main(
            [
                "score",
                "--pred",
                str(pred_path),
                "--gold",
                str(toy_data_dir / "dev.json"),
                "--fact-index",
                str(toy_data_dir / "train.json"),
                "--out",
                str(report_path),
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "MUC" in out and "RE Ign" in out
    report = json.loads(report_path.read_text())
    assert set(report) >= {"mention", "muc", "b_cubed", "ceaf_phi4", "relation", "relation_ign"}


def test_train_setting_override(toy_data_dir, toy_config, tmp_path, capsys):
    run_dir = tmp_path / "runs"
    assert (
        main(
            [
                "train",
                "--config",
                str(toy_config),
                "--data",
                str(toy_data_dir),
                "--setting",
                "joint",
                "--out",
                str(run_dir),
            ]
        )
        == 0
    )
    assert (run_dir / "joint.ckpt").exists()
    assert "setting=joint " in capsys.readouterr().out


def test_train_holds_out_dev_when_missing(tmp_path, toy_config, capsys):
    docs, schema = generate_toy_corpus(n_docs=8, seed=3)
    data = tmp_path / "data"
    data.mkdir()
    save_corpus(data / "train.json", docs, schema)
    run_dir = tmp_path / "runs"
    assert (
        main(
            ["train", "--config", str(toy_config), "--data", str(data), "--out", str(run_dir)]
        )
        == 0
    )
    assert (run_dir / "joint_m.ckpt").exists()


def test_score_without_fact_index(toy_data_dir, toy_config, tmp_path, capsys):
    # empty predictions score zero but the report renders
    pred_path = tmp_path / "pred.json"
    pred_path.write_text(json.dumps({"documents": []}))
    assert (
        main(["score", "--pred", str(pred_path), "--gold", str(toy_data_dir / "dev.json")])
        == 0
    )
    out = capsys.readouterr().out
    assert "RE Ign" not in out
