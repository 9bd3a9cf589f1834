import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from smoothsum import labcli
from smoothsum.errors import ConfigurationError
from smoothsum.metrics import ComparisonResult, read_predictions
from smoothsum.synthetic import generate_samples, write_corpus_jsonl

FAST_MODEL = ["--embed-dim", "16", "--hidden-dim", "16", "--code-len", "20",
              "--comment-len", "8", "--batch-size", "32", "--lr", "2e-3",
              "--dropout", "0", "--heads", "2", "--layers", "1"]


def run_cli(*argv):
    return labcli.main(list(argv))


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "toy.jsonl"
    write_corpus_jsonl(generate_samples(150, seed=5), path)
    return path


@pytest.fixture(scope="module")
def prepared_dir(tmp_path_factory, corpus_file):
    out = tmp_path_factory.mktemp("prep") / "prep"
    code = run_cli("prepare", "--data", str(corpus_file), "--out", str(out),
                   "--seed", "11", "--src-vocab", "200", "--tgt-vocab", "150")
    assert code == 0
    return out


def tree_digest(directory):
    digest = {}
    for path in sorted(Path(directory).rglob("*")):
        if path.is_file():
            digest[str(path.relative_to(directory))] = hashlib.sha256(
                path.read_bytes()).hexdigest()
    return digest


class TestRenderReport:
    def _table(self, p_value):
        row = labcli.ReportRow(
            epsilon=0.1,
            scores={"meteor": 0.3341, "similarity": 0.51, "bleu": 0.19},
            comparisons={
                "meteor": ComparisonResult("meteor", 3.76, p_value, 0.05,
                                           p_value < 0.05),
                "similarity": ComparisonResult("similarity", -0.26, 0.074,
                                               0.05, False),
            })
        baseline = labcli.ReportRow(
            epsilon=0.0,
            scores={"meteor": 0.32, "similarity": 0.50, "bleu": 0.18})
        return labcli.ReportTable(title="t", rows=[baseline, row])

    def test_small_p_prints_less_than(self):
        text = labcli.render_report(self._table(0.0042), "csv")
        assert "<0.01" in text

    def test_two_decimal_p(self):
        text = labcli.render_report(self._table(0.074), "csv")
        lines = text.splitlines()
        assert lines[2].split(",")[5] == "0.07"

    def test_baseline_dashes(self):
        text = labcli.render_report(self._table(0.5), "csv")
        assert text.splitlines()[1] == "0,0.32,0.50,0.18,-,-,-,-"

    def test_negative_t_preserved(self):
        text = labcli.render_report(self._table(0.5), "csv")
        assert "-0.26" in text

    def test_empty_table_header_only(self):
        text = labcli.render_report(labcli.ReportTable("t", []), "csv")
        assert text == ",".join(labcli._REPORT_HEADER) + "\n"

    def test_markdown_aligned(self):
        text = labcli.render_report(self._table(0.0042), "markdown")
        lines = text.splitlines()
        assert lines[0].startswith("| epsilon")
        assert set(lines[1]) <= {"|", "-"}
        assert all(len(l) == len(lines[0]) for l in lines[1:])

    def test_unknown_format(self):
        with pytest.raises(ConfigurationError):
            labcli.render_report(labcli.ReportTable("t", []), "html")


class TestSweepSpec:
    def test_default_grid(self):
        assert labcli.SweepSpec().epsilons == (
            0.0, 0.001, 0.003, 0.007, 0.02, 0.05, 0.10, 0.25, 0.40)

    def test_rejects_unsorted(self):
        with pytest.raises(ConfigurationError):
            labcli.SweepSpec(epsilons=(0.1, 0.0))


class TestExperimentConfig:
    def test_requires_seed(self):
        with pytest.raises(ConfigurationError):
            labcli.ExperimentConfig("d", "attendgru", (0.1,), 1, ())

    def test_epsilon_range(self):
        with pytest.raises(ConfigurationError):
            labcli.ExperimentConfig("d", "attendgru", (1.5,), 1, (1,))


class TestPrepare:
    def test_outputs_and_determinism(self, tmp_path, corpus_file):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            assert run_cli("prepare", "--data", str(corpus_file), "--out",
                           str(out), "--seed", "3") == 0
        assert tree_digest(out_a) == tree_digest(out_b)
        names = {p.name for p in out_a.iterdir()}
        assert names == {"train.jsonl", "val.jsonl", "test.jsonl",
                         "vocab.src.txt", "vocab.tgt.txt", "vocab.ast.txt"}

    def test_quantile_filters(self, tmp_path, corpus_file):
        out = tmp_path / "q"
        assert run_cli("prepare", "--data", str(corpus_file), "--out",
                       str(out), "--seed", "3", "--quantile", "0.5") == 0
        full = sum(1 for _ in open(out / "train.jsonl"))
        assert full > 0

    def test_vocab_below_minimum_exits_2(self, tmp_path, corpus_file):
        assert run_cli("prepare", "--data", str(corpus_file), "--out",
                       str(tmp_path / "x"), "--src-vocab", "4") == 2

    def test_malformed_input_exits_2(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "1"}\n')
        assert run_cli("prepare", "--data", str(bad), "--out",
                       str(tmp_path / "y")) == 2

    def test_usage_error_exits_1(self):
        assert run_cli("prepare") == 1
        assert run_cli("not-a-command") == 1


class TestTrainPredictScore:
    def test_full_chain(self, tmp_path, prepared_dir):
        run_dir = tmp_path / "run"
        assert run_cli("train", "--data", str(prepared_dir), "--out",
                       str(run_dir), "--seed", "3", "--epochs", "2",
                       "--epsilon", "0.1", *FAST_MODEL) == 0
        assert (run_dir / "checkpoint.json").exists()
        history = (run_dir / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,loss_nats,val_acc,seconds"
        assert len(history) == 3

        preds_path = tmp_path / "preds.jsonl"
        assert run_cli("predict", "--data", str(prepared_dir), "--out",
                       str(preds_path), "--checkpoint",
                       str(run_dir / "checkpoint.json"), "--seed", "3") == 0
        preds = read_predictions(preds_path)
        assert len(preds) > 0

        score_prefix = tmp_path / "scores"
        assert run_cli("score", "--predictions", str(preds_path), "--out",
                       str(score_prefix)) == 0
        payload = json.loads((tmp_path / "scores.json").read_text())
        assert set(payload) >= {"bleu", "meteor", "similarity", "count"}
        assert (tmp_path / "scores.md").read_text().startswith("| bleu")

    def test_predict_vocab_mismatch_exits_2(self, tmp_path, prepared_dir,
                                            corpus_file):
        other = tmp_path / "other_prep"
        assert run_cli("prepare", "--data", str(corpus_file), "--out",
                       str(other), "--seed", "3", "--tgt-vocab", "40") == 0
        run_dir = tmp_path / "run2"
        assert run_cli("train", "--data", str(other), "--out", str(run_dir),
                       "--seed", "3", "--epochs", "1", *FAST_MODEL) == 0
        assert run_cli("predict", "--data", str(prepared_dir), "--out",
                       str(tmp_path / "p.jsonl"), "--checkpoint",
                       str(run_dir / "checkpoint.json"), "--seed", "3") == 2


class TestCompare:
    def test_pair_layout(self, tmp_path, prepared_dir):
        out = tmp_path / "pair"
        assert run_cli("compare", "--data", str(prepared_dir), "--out",
                       str(out), "--seed", "3", "--epochs", "2",
                       *FAST_MODEL) == 0
        csv_lines = (out / "pair_report.csv").read_text().splitlines()
        assert len(csv_lines) == 3
        baseline, treated = csv_lines[1], csv_lines[2]
        assert baseline.startswith("0,")
        assert baseline.endswith("-,-,-,-")
        assert treated.startswith("0.1,")
        assert "-" not in treated.split(",")[4:]
        assert (out / "pair_report.md").exists()
        assert (out / "checkpoint_eps0.json").exists()
        assert (out / "checkpoint_eps0p1.json").exists()
        assert (out / "predictions_eps0.jsonl").exists()
        assert (out / "predictions_eps0p1.jsonl").exists()


class TestDiversityCommand:
    def test_same_file_zero_delta(self, tmp_path, prepared_dir):
        pair_dir = tmp_path / "pair"
        assert run_cli("compare", "--data", str(prepared_dir), "--out",
                       str(pair_dir), "--seed", "3", "--epochs", "1",
                       *FAST_MODEL) == 0
        preds = pair_dir / "predictions_eps0.jsonl"
        out = tmp_path / "div.csv"
        assert run_cli("diversity", "--predictions", str(preds), str(preds),
                       "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("file,total_words,unique_words")
        assert lines[1].split(",")[4:] == ["0", "0"]
        assert lines[2].split(",")[4:] == ["0", "0"]
        assert (tmp_path / "div.md").read_text().startswith("| file")

    def test_malformed_predictions_exit_2(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{nope\n")
        assert run_cli("diversity", "--predictions", str(bad)) == 2


class TestNumericFailureExit:
    def test_sweep_divergence_exits_3_with_partial_results(
            self, tmp_path, prepared_dir, monkeypatch):
        from smoothsum import trainer as TR
        from smoothsum.errors import NumericError
        real_train = TR.train
        calls = {"n": 0}

        def failing_train(model, train_set, val_set, config):
            calls["n"] += 1
            if calls["n"] >= 3:
                raise NumericError("synthetic divergence in batch 0")
            return real_train(model, train_set, val_set, config)

        monkeypatch.setattr(labcli.trainer, "train", failing_train)
        out = tmp_path / "sweep"
        code = run_cli("sweep", "--data", str(prepared_dir), "--out",
                       str(out), "--seed", "3", "--epochs", "1",
                       "--vocab-sizes", "60", *FAST_MODEL)
        assert code == 3
        partial = (out / "sweep_v60.csv").read_text().splitlines()
        assert len(partial) == 3  # header + the two completed rows


class TestActionword:
    def test_three_rows_and_label_space(self, tmp_path, prepared_dir, capsys):
        out = tmp_path / "aw"
        assert run_cli("actionword", "--data", str(prepared_dir), "--out",
                       str(out), "--seed", "3", "--epochs", "1",
                       *FAST_MODEL) == 0
        lines = (out / "actionword.csv").read_text().splitlines()
        assert lines[0].startswith("epsilon,micro_precision")
        assert [l.split(",")[0] for l in lines[1:]] == ["0", "0.1", "0.4"]
        assert (out / "actionword.md").read_text().startswith("| epsilon")


def test_console_entry_point(corpus_file, tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "smoothsum.labcli", "prepare", "--data",
         str(corpus_file), "--out", str(tmp_path / "p"), "--seed", "1"],
        capture_output=True, text=True)
    assert result.returncode == 0
    assert "prepared" in result.stdout
