import json

import pytest

from arggen.cli import main
from arggen.evaluator import MetricRow
from arggen.synthetic import make_smoke_corpus
from arggen.corpus import save_corpus


@pytest.fixture()
def corpus_dir(tmp_path):
    directory = tmp_path / "corpus"
    directory.mkdir()
    save_corpus(make_smoke_corpus(n_gold=12, n_auto=13, seed=3), directory / "cases.jsonl")
    return directory


def run_cli(*args):
    return main([str(a) for a in args])


def base_flags(tmp_path, corpus_dir):
    return [
        "--corpus-dir", corpus_dir,
        "--work-dir", tmp_path / "work",
        "--seed", 3,
        "--train-count", 15,
        "--validation-count", 4,
        "--test-count", 6,
        "--model", "echo",
        "--k", 3,
    ]


class TestFullChain:
    def test_echo_chain_reaches_full_overlap(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        for stage in ("ingest", "label", "build-pairs", "train", "generate", "evaluate"):
            assert run_cli(stage, *flags) == 0
        out = capsys.readouterr().out
        assert "100.00%" in out
        run_dirs = list((tmp_path / "work" / "runs").iterdir())
        assert len(run_dirs) == 1
        report = json.loads((run_dirs[0] / "report.json").read_text())
        assert report["avg_word_overlap"] == 100.0
        assert report["avg_semantic_sim"] >= 0.999

    def test_rewrite_review_chain(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        for stage in ("ingest", "label", "build-pairs", "rewrite"):
            assert run_cli(stage, *flags) == 0
        assert run_cli("review", *flags, "--approve-all") == 0
        rewritten = (tmp_path / "work" / "pairs_rewritten.jsonl").read_text().splitlines()
        assert rewritten
        assert all(json.loads(line)["source"] == "rewritten" for line in rewritten)
        # the rewritten dataset feeds its own run
        assert run_cli("train", *flags, "--source", "rewritten") == 0
        run_dirs = [p.name for p in (tmp_path / "work" / "runs").iterdir()]
        assert any("rewritten" in name for name in run_dirs)

    def test_train_on_rewritten_requires_review(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        for stage in ("ingest", "label", "build-pairs"):
            assert run_cli(stage, *flags) == 0
        assert run_cli("train", *flags, "--source", "rewritten") == 1
        err = capsys.readouterr().err
        assert "pairs_rewritten.jsonl" in err and "review" in err


class TestRawTextIngestion:
    def test_txt_files_are_segmented(self, tmp_path, corpus_dir):
        (corpus_dir / "fresh_case.txt").write_text(
            "The petitioner moved the court. Relief was refused. An appeal followed."
        )
        flags = [
            "--corpus-dir", corpus_dir,
            "--work-dir", tmp_path / "work",
            "--seed", 3,
            "--train-count", 16,
            "--validation-count", 4,
            "--test-count", 6,
        ]
        assert run_cli("ingest", *flags) == 0
        lines = (tmp_path / "work" / "corpus.jsonl").read_text().splitlines()
        docs = [json.loads(line) for line in lines]
        raw = next(d for d in docs if d["doc_id"] == "fresh_case")
        assert raw["provenance"] == "auto_labeled"
        assert [s["text"] for s in raw["sentences"]] == [
            "The petitioner moved the court.",
            "Relief was refused.",
            "An appeal followed.",
        ]


class TestCrfLabelerPath:
    def test_chain_with_trained_labeler(self, tmp_path, corpus_dir):
        flags = base_flags(tmp_path, corpus_dir) + ["--labeler", "crf"]
        for stage in ("ingest", "label", "build-pairs"):
            assert run_cli(stage, *flags) == 0
        assert (tmp_path / "work" / "labeler.json").exists()
        labeled = [json.loads(l) for l in (tmp_path / "work" / "labeled.jsonl").read_text().splitlines()]
        assert all(
            s["label"] is not None for doc in labeled for s in doc["sentences"]
        )
        # gold documents pass through untouched
        gold = next(d for d in labeled if d["provenance"] == "gold_annotated")
        assert all(s["label_source"] == "gold" for s in gold["sentences"])


class TestTinyModelChain:
    def test_train_generate_evaluate(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        flags[flags.index("echo")] = "tiny"
        flags += ["--epochs", 2, "--batch-size", 128]
        for stage in ("ingest", "label", "build-pairs", "train", "generate", "evaluate"):
            assert run_cli(stage, *flags) == 0
        run_dirs = list((tmp_path / "work" / "runs").iterdir())
        assert len(run_dirs) == 1
        assert (run_dirs[0] / "checkpoint" / "params.npz").exists()
        report = json.loads((run_dirs[0] / "report.json").read_text())
        assert report["model_id"] == "tiny-char-causal"
        assert 0.0 <= report["avg_word_overlap"] <= 100.0


class TestStageDependencies:
    def test_evaluate_before_generate(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        for stage in ("ingest", "label", "build-pairs", "train"):
            assert run_cli(stage, *flags) == 0
        assert run_cli("evaluate", *flags) == 1
        err = capsys.readouterr().err
        assert err.count("\n") == 1  # single-line machine-parsable error
        assert "StageDependencyError" in err
        assert "generations.jsonl" in err
        assert "generate" in err

    def test_label_before_ingest(self, tmp_path, corpus_dir, capsys):
        assert run_cli("label", *base_flags(tmp_path, corpus_dir)) == 1
        err = capsys.readouterr().err
        assert "corpus.jsonl" in err and "ingest" in err


class TestIdempotency:
    def test_rerun_produces_identical_artifacts(self, tmp_path, corpus_dir):
        flags = base_flags(tmp_path, corpus_dir)
        for stage in ("ingest", "label", "build-pairs"):
            assert run_cli(stage, *flags) == 0
        work = tmp_path / "work"
        snapshots = {
            name: (work / name).read_bytes()
            for name in ("corpus.jsonl", "labeled.jsonl", "pairs.jsonl")
        }
        for stage in ("ingest", "label", "build-pairs"):
            assert run_cli(stage, *flags) == 0
        for name, before in snapshots.items():
            assert (work / name).read_bytes() == before

    def test_stages_do_not_mutate_predecessors(self, tmp_path, corpus_dir):
        flags = base_flags(tmp_path, corpus_dir)
        assert run_cli("ingest", *flags) == 0
        before = (tmp_path / "work" / "corpus.jsonl").read_bytes()
        assert run_cli("label", *flags) == 0
        assert run_cli("build-pairs", *flags) == 0
        assert (tmp_path / "work" / "corpus.jsonl").read_bytes() == before


class TestWorkLock:
    def test_locked_work_dir_rejected(self, tmp_path, corpus_dir, capsys):
        work = tmp_path / "work"
        work.mkdir()
        (work / ".arggen.lock").write_text("999999")
        assert run_cli("ingest", *base_flags(tmp_path, corpus_dir)) == 1
        assert "locked" in capsys.readouterr().err

    def test_lock_released_after_stage(self, tmp_path, corpus_dir):
        flags = base_flags(tmp_path, corpus_dir)
        assert run_cli("ingest", *flags) == 0
        assert not (tmp_path / "work" / ".arggen.lock").exists()

    def test_lock_released_after_failed_stage(self, tmp_path, corpus_dir, capsys):
        flags = base_flags(tmp_path, corpus_dir)
        assert run_cli("label", *flags) == 1  # fails: ingest never ran
        assert not (tmp_path / "work" / ".arggen.lock").exists()


class TestReportCommand:
    def _write_run(self, run_dir, row: MetricRow):
        run_dir.mkdir(parents=True)
        (run_dir / "report.json").write_text(
            json.dumps(
                {
                    "model_id": row.model_id,
                    "k": row.k,
                    "data_source": row.data_source,
                    "avg_word_overlap": row.avg_word_overlap,
                    "avg_semantic_sim": row.avg_semantic_sim,
                    "pair_count": row.pair_count,
                }
            )
        )

    def test_two_run_comparison(self, tmp_path, capsys):
        run_a = tmp_path / "runs" / "a"
        run_b = tmp_path / "runs" / "b"
        self._write_run(run_a, MetricRow("tiny-char-causal", 3, "original", 15.12, 0.335, 20))
        self._write_run(run_b, MetricRow("tiny-char-causal", 5, "rewritten", 63.13, 0.492, 20))
        assert run_cli("report", "--runs", run_a, run_b, "--csv", tmp_path / "out.csv") == 0
        out = capsys.readouterr().out
        table_lines = [line for line in out.splitlines() if line.strip() and not line.startswith("wrote ")]
        assert len(table_lines) == 4  # header + separator + 2 rows
        assert "15.12%" in out and "**63.13%**" in out
        csv_lines = (tmp_path / "out.csv").read_text().splitlines()
        assert len(csv_lines) == 3

    def test_report_requires_evaluated_run(self, tmp_path, capsys):
        missing = tmp_path / "runs" / "nope"
        assert run_cli("report", "--runs", missing) == 1
        assert "evaluate" in capsys.readouterr().err


class TestConfigFile:
    def test_config_file_with_flag_override(self, tmp_path, corpus_dir, capsys):
        config = {
            "corpus_dir": str(corpus_dir),
            "work_dir": str(tmp_path / "work"),
            "seed": 3,
            "train_count": 15,
            "validation_count": 4,
            "test_count": 6,
            "model": "echo",
            "k": 3,
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        assert run_cli("ingest", "--config", config_path) == 0
        # same config, but override the work dir by flag
        other_work = tmp_path / "other"
        assert run_cli("ingest", "--config", config_path, "--work-dir", other_work) == 0
        assert (other_work / "corpus.jsonl").exists()

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({"no_such_field": 1}))
        assert run_cli("ingest", "--config", config_path) == 1
        assert "unknown config keys" in capsys.readouterr().err
