import io
import json

import numpy as np
import pytest

from main import main
from src.checkpoint import load_checkpoint
from src.corpus import read_corpus, write_corpus
from src.errors import MissingSection, VocabMismatch, error_category
from src.models import ModelConfig, ModelVariant, SplitSpec, TrainConfig
from src.pipeline import cmd_baseline, cmd_eval, cmd_gen_synthetic, cmd_ingest, cmd_train
from src.utils.config import Config

TINY_MODEL = ["--emb-dim", "4", "--hidden", "3", "--dec-hidden", "6", "--layers", "1",
              "--attn-dim", "5", "--proj-dim", "5", "--batch-size", "4"]

FINDINGS = "there is no fracture . the joint spaces are maintained . no effusion ."


def raw_record(record_id, findings=FINDINGS, body_part="ankle"):
    return {"id": record_id, "body_part": body_part, "background": "technique : 3 views of the left ankle .",
            "findings": findings, "impression": "normal left ankle radiographs ."}


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    corpus = root / "corpus.jsonl"
    checkpoint = root / "model.ckpt"
    assert main(["gen-synthetic", str(corpus), "--n", "30", "--seed", "2"]) == 0
    assert main(["train", str(corpus), str(checkpoint), "--epochs", "1", *TINY_MODEL]) == 0
    return root, corpus, checkpoint


def test_gen_synthetic(tmp_path, capsys):
    out = tmp_path / "synthetic.jsonl"
    assert main(["gen-synthetic", str(out), "--n", "12"]) == 0
    assert "12 reports written" in capsys.readouterr().out
    assert len(read_corpus(out)) == 12
    assert cmd_gen_synthetic(tmp_path / "again.jsonl", 12) == 12
    assert (tmp_path / "again.jsonl").read_text() == out.read_text()


def test_ingest_keeps_valid_records(tmp_path, capsys):
    raw, out = tmp_path / "raw.jsonl", tmp_path / "corpus.jsonl"
    write_jsonl(raw, [raw_record("a"), raw_record("b"), raw_record("c", body_part="knee"),
                      raw_record("d", findings="no fracture .")])
    assert main(["ingest", str(raw), str(out)]) == 0
    assert "FindingsTooShort" in capsys.readouterr().out
    assert [r.id for r in read_corpus(out)] == ["a", "b", "c"]

    tally = cmd_ingest(raw, out)
    assert tally.loc["total", "kept"] == 3
    assert tally.loc["ankle", "FindingsTooShort"] == 1
    assert tally.loc["total", "total"] == 4


def test_ingest_restricts_body_parts(tmp_path):
    raw, out = tmp_path / "raw.jsonl", tmp_path / "corpus.jsonl"
    write_jsonl(raw, [raw_record("a"), raw_record("b"), raw_record("c", body_part="knee")])
    cmd_ingest(raw, out, top_body_parts=1)
    assert {r.body_part for r in read_corpus(out)} == {"ankle"}


def test_ingest_tallies_records_dropped_by_selection(tmp_path):
    raw, out = tmp_path / "raw.jsonl", tmp_path / "corpus.jsonl"
    write_jsonl(raw, [raw_record(f"a{i}") for i in range(4)] + [raw_record("k", body_part="knee"),
                                                                 raw_record("s", findings="no .")])
    tally = cmd_ingest(raw, out, top_body_parts=1, cap_per_body_part=3)
    assert len(read_corpus(out)) == 3
    assert tally.loc["ankle", "kept"] == 3
    assert tally.loc["ankle", "OverCap"] == 1
    assert tally.loc["knee", "BodyPartNotInTop"] == 1
    assert tally.loc["ankle", "FindingsTooShort"] == 1
    assert tally.loc["total", "kept"] == 3
    assert tally.loc["total", "total"] == 6


def test_ingest_reports_malformed_line(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    raw.write_text(json.dumps(raw_record("a")) + "\nnot json\n", encoding="utf-8")
    assert main(["ingest", str(raw), str(tmp_path / "out.jsonl")]) == 1
    assert capsys.readouterr().err.startswith("error: MalformedRecord:")


def test_ingest_of_empty_input_succeeds(tmp_path, capsys):
    raw, out = tmp_path / "raw.jsonl", tmp_path / "out.jsonl"
    raw.write_text("", encoding="utf-8")
    assert main(["ingest", str(raw), str(out)]) == 0
    assert "0 records kept" in capsys.readouterr().out
    assert out.read_text() == ""


def test_missing_input_is_an_io_error(tmp_path, capsys):
    assert main(["baseline", "lexrank", str(tmp_path / "missing.jsonl")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: IoError:")
    assert len(err.strip().splitlines()) == 1


@pytest.mark.parametrize("method", ["lexrank", "lsa"])
def test_baseline_scores_test_split(workspace, tmp_path, capsys, method):
    _, corpus, _ = workspace
    output, predictions = tmp_path / "report.json", tmp_path / "predictions.jsonl"
    assert main(["baseline", method, str(corpus), "--output", str(output), "--predictions", str(predictions)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(output.read_text())
    assert printed["count"] == 6
    assert 0.0 <= printed["rouge1"]["mean_f1"] <= 100.0
    rows = [json.loads(line) for line in predictions.read_text().splitlines()]
    assert [row["id"] for row in rows] == sorted(row["id"] for row in rows)
    assert set(rows[0]) == {"id", "prediction", "reference"}


def test_unknown_baseline(workspace, capsys):
    _, corpus, _ = workspace
    assert main(["baseline", "textrank", str(corpus)]) == 1
    assert capsys.readouterr().err.startswith("error: UnknownMethod:")


def test_train_writes_checkpoint(workspace):
    _, _, checkpoint = workspace
    restored = load_checkpoint(checkpoint)
    assert restored.epoch == 1
    assert restored.architecture.variant.value == "background-gated"
    assert restored.split.seed == 1


def test_eval_writes_report_and_predictions(workspace, tmp_path, capsys):
    _, corpus, checkpoint = workspace
    output, predictions = tmp_path / "report.json", tmp_path / "predictions.jsonl"
    assert main(["eval", str(checkpoint), str(corpus), "--beam", "2", "--max-len", "10",
                 "--output", str(output), "--predictions", str(predictions)]) == 0
    report = json.loads(output.read_text())
    assert report["count"] == 6
    assert set(report) >= {"rouge1", "rouge2", "rougeL", "by_body_part"}
    rows = [json.loads(line) for line in predictions.read_text().splitlines()]
    assert len(rows) == 6
    assert all(len(row["prediction"].split()) <= 10 for row in rows)
    assert all("<eos>" not in row["prediction"] for row in rows)
    capsys.readouterr()


def test_eval_rejects_a_different_corpus(workspace, tmp_path, capsys):
    _, corpus, checkpoint = workspace
    changed = tmp_path / "changed.jsonl"
    write_corpus([r.model_copy(update={"findings": r.findings + ["zebra"]}) for r in read_corpus(corpus)], changed)
    assert main(["eval", str(checkpoint), str(changed), "--max-len", "5"]) == 1
    assert capsys.readouterr().err.startswith(f"error: {VocabMismatch.__name__}:")
    # a whole foreign corpus is decoded without rebuilding the split
    assert main(["eval", str(checkpoint), str(changed), "--split", "all", "--beam", "1", "--max-len", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 30


def test_summarize_reads_stdin(workspace, monkeypatch, capsys):
    _, _, checkpoint = workspace
    report = {"background": "technique : 3 views of the right knee .", "findings": FINDINGS}
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(report)))
    assert main(["summarize", str(checkpoint), "--beam", "2", "--max-len", "8"]) == 0
    summary = capsys.readouterr().out.strip()
    assert len(summary.split()) <= 8
    assert "<eos>" not in summary


def test_summarize_requires_findings(workspace, monkeypatch, capsys):
    _, _, checkpoint = workspace
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps({"background": "history : pain ."})))
    assert main(["summarize", str(checkpoint)]) == 1
    assert capsys.readouterr().err.startswith("error: MissingSection:")


def test_resume_continues_training(workspace, tmp_path, monkeypatch):
    _, corpus, checkpoint = workspace
    resumed = tmp_path / "resumed.ckpt"
    monkeypatch.setattr("src.training.Trainer.dev_loss", lambda self: 0.0)
    assert main(["train", str(corpus), str(resumed), "--epochs", "1", "--resume", str(checkpoint),
                 *TINY_MODEL]) == 0
    first, second = load_checkpoint(checkpoint), load_checkpoint(resumed)
    assert second.epoch == 2
    assert second.optimizer.step == 2 * first.optimizer.step


def test_resume_keeps_the_checkpoint_when_dev_gets_worse(workspace, tmp_path, monkeypatch):
    _, corpus, checkpoint = workspace
    resumed = tmp_path / "resumed.ckpt"
    monkeypatch.setattr("src.training.Trainer.dev_loss", lambda self: 1e6)
    assert main(["train", str(corpus), str(resumed), "--epochs", "2", "--resume", str(checkpoint)]) == 0
    first, second = load_checkpoint(checkpoint), load_checkpoint(resumed)
    assert second.dev_metric == first.dev_metric
    assert second.optimizer.step == first.optimizer.step
    for name in first.params:
        np.testing.assert_array_equal(second.params[name], first.params[name])


@pytest.mark.parametrize("flags", [["--variant", "plain"], ["--hidden", "7"], ["--layers", "2", "--emb-dim", "9"]])
def test_resume_rejects_a_different_architecture(workspace, tmp_path, capsys, flags):
    _, corpus, checkpoint = workspace
    resumed = tmp_path / "resumed.ckpt"
    assert main(["train", str(corpus), str(resumed), "--epochs", "1", "--resume", str(checkpoint), *flags]) == 1
    assert capsys.readouterr().err.startswith("error: ConfigConflict:")
    assert not resumed.exists()


def test_invalid_beam_is_rejected(workspace, capsys):
    _, corpus, checkpoint = workspace
    assert main(["eval", str(checkpoint), str(corpus), "--beam", "0"]) == 1
    assert capsys.readouterr().err.startswith("error: ValidationError:")


@pytest.mark.parametrize("exc, category", [
    (MissingSection("findings"), "MissingSection"),
    (FileNotFoundError("gone"), "IoError"),
    (KeyError("x"), "KeyError"),
])
def test_error_category(exc, category):
    assert error_category(exc) == category


def test_config_reads_environment(monkeypatch):
    monkeypatch.setenv("SUMMARIZER_MAX_WORKERS", "2")
    monkeypatch.setenv("SUMMARIZER_BOOTSTRAP_SAMPLES", "50")
    config = Config()
    assert config.MAX_WORKERS == 2
    assert config.BOOTSTRAP_SAMPLES == 50


@pytest.mark.parametrize("name, value", [
    ("SUMMARIZER_MAX_WORKERS", "0"),
    ("SUMMARIZER_BOOTSTRAP_SAMPLES", "-1"),
    ("SUMMARIZER_LOG_LEVEL", "LOUD"),
])
def test_config_rejects_invalid_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError):
        Config()


@pytest.mark.slow
def test_background_gate_beats_plain_model_on_laterality(tmp_path):
    corpus = tmp_path / "ordinal.jsonl"
    cmd_gen_synthetic(corpus, 400, seed=1)
    train_config = TrainConfig(learning_rate=0.005, batch_size=1, max_epochs=25, patience=5)
    rouge_l, dev_nll = {}, {}
    for variant in (ModelVariant.PLAIN, ModelVariant.BACKGROUND_GATED):
        checkpoint = tmp_path / f"{variant.value}.ckpt"
        model_config = ModelConfig(variant=variant, emb_dim=16, hidden=16, dec_hidden=32, layers=1,
                                   attn_dim=32, proj_dim=32, init_seed=1)
        trained = cmd_train(corpus, checkpoint, model_config, train_config, SplitSpec(seed=1))
        dev_nll[variant.value] = trained.dev_metric
        rouge_l[variant.value] = cmd_eval(checkpoint, corpus, split="test").rougeL.mean_f1
    for method in ("lexrank", "lsa"):
        rouge_l[method] = cmd_baseline(method, corpus, split="test", split_spec=SplitSpec(seed=1)).rougeL.mean_f1

    assert dev_nll["background-gated"] < dev_nll["plain"], dev_nll
    assert rouge_l["background-gated"] >= rouge_l["plain"] + 2.0, rouge_l
    assert rouge_l["plain"] > max(rouge_l["lexrank"], rouge_l["lsa"]), rouge_l
