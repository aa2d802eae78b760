"""Pipeline command line: ingest | label | build-pairs | rewrite | review | train | generate | evaluate | report.

Each stage reads its predecessor's JSONL/JSON artifacts from the work
directory and writes its own; re-running a stage with identical inputs,
config, and seed reproduces the artifact byte-for-byte (timestamps inside run
manifests aside). A lock file keeps two stages from sharing a work directory.

Configuration lives in a JSON file passed via --config; every field can be
overridden by a same-named flag (underscores become dashes).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from . import rewriter as rewriter_mod
from .adapters import load_adapter, make_adapter
from .corpus import (
    CaseDocument,
    SentenceRecord,
    corpus_stats,
    load_corpus,
    load_corpus_dir,
    save_corpus,
    segment_sentences,
    split_corpus,
)
from .embeddings import HashingEmbeddingProvider
from .errors import ArgGenError, StageDependencyError
from .evaluator import evaluate_run, load_report, render_csv, render_table, save_report
from .generation import (
    FineTuneConfig,
    RunManifest,
    fine_tune_run,
    generate_for_test,
    load_generations,
    save_generations,
)
from .pair_builder import TokenBudget, build_pairs_for_corpus, load_pairs, save_pairs
from .role_labeler import (
    KeywordEncoder,
    LabelerTrainConfig,
    keyword_baseline_labeler,
    label_document,
    train_labeler,
)
from .summarizer import SummaryConfig

LOCK_NAME = ".arggen.lock"


@dataclass
class PipelineConfig:
    corpus_dir: str = "corpus"
    work_dir: str = "work"
    seed: int = 13
    train_count: int = 70
    validation_count: int = 10
    test_count: int = 20
    k: int = 5
    family: str = "causal"
    model: str = "tiny"
    source: str = "original"  # which pair dataset train/generate consume
    labeler: str = "keyword"  # keyword | crf
    epochs: int = 30
    learning_rate: float = 3e-3
    batch_size: int = 64
    max_tokens: int | None = None  # None -> family default
    max_new_tokens: int = 256
    embedding_dim: int = 64
    overlap_direction: str = "recall"
    rewrite_backend: str = "identity"  # identity | http
    rewrite_url: str | None = None

    @classmethod
    def from_sources(cls, config_path: str | None, overrides: dict) -> "PipelineConfig":
        values = {}
        if config_path:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(loaded) - known
            if unknown:
                raise ArgGenError(f"unknown config keys: {sorted(unknown)}")
            values.update(loaded)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


# --- artifact paths -------------------------------------------------------------


def _work(config: PipelineConfig) -> Path:
    return Path(config.work_dir)


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise StageDependencyError(path, stage=stage)
    return path


def _pairs_path(config: PipelineConfig) -> Path:
    if config.source == "rewritten":
        return _work(config) / "pairs_rewritten.jsonl"
    return _work(config) / "pairs.jsonl"


@contextmanager
def _work_lock(config: PipelineConfig):
    work = _work(config)
    work.mkdir(parents=True, exist_ok=True)
    lock = work / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ArgGenError(f"work dir is locked by another stage ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _resolve_run_dir(config: PipelineConfig, run_flag: str | None) -> Path:
    if run_flag:
        return Path(run_flag)
    runs_root = _work(config) / "runs"
    candidates = (
        sorted(p for p in runs_root.iterdir() if (p / "manifest.json").exists())
        if runs_root.exists()
        else []
    )
    if len(candidates) == 1:
        return candidates[0]
    if not candidates:
        raise StageDependencyError(runs_root / "<run_id>" / "manifest.json", stage="train")
    raise ArgGenError(f"multiple runs under {runs_root}; pass --run PATH")


# --- stages ---------------------------------------------------------------------


def stage_ingest(config: PipelineConfig) -> None:
    corpus_dir = Path(config.corpus_dir)
    if not corpus_dir.exists():
        raise StageDependencyError(corpus_dir, stage=None)
    docs = load_corpus_dir(corpus_dir)
    for raw_path in sorted(corpus_dir.glob("*.txt")):
        sentences = tuple(
            SentenceRecord(index=i, text=text)
            for i, text in enumerate(segment_sentences(raw_path.read_text(encoding="utf-8")))
        )
        docs.append(
            CaseDocument(doc_id=raw_path.stem, sentences=sentences, provenance="auto_labeled")
        )
    docs = split_corpus(
        docs, config.seed, (config.train_count, config.validation_count, config.test_count)
    )
    out = _work(config) / "corpus.jsonl"
    save_corpus(docs, out)
    for row in corpus_stats(docs):
        print(
            f"{row.split:<12} docs={row.doc_count:<5} "
            f"avg_words={row.avg_words:.1f} avg_sentences={row.avg_sentences:.1f}"
        )
    print(f"wrote {len(docs)} documents to {out}")


def stage_label(config: PipelineConfig) -> None:
    docs = load_corpus(_require(_work(config) / "corpus.jsonl", "ingest"))
    if config.labeler == "keyword":
        labeled = [d if d.is_fully_gold() else keyword_baseline_labeler(d) for d in docs]
    elif config.labeler == "crf":
        gold_train = [d for d in docs if d.split == "train" and d.is_fully_gold()]
        gold_val = [d for d in docs if d.split == "validation" and d.is_fully_gold()]
        model = train_labeler(
            gold_train, gold_val, KeywordEncoder(), LabelerTrainConfig(seed=config.seed)
        )
        model.save(_work(config) / "labeler.json")
        labeled = [d if d.is_fully_gold() else label_document(d, model) for d in docs]
    else:
        raise ArgGenError(f"unknown labeler {config.labeler!r} (expected keyword or crf)")
    out = _work(config) / "labeled.jsonl"
    save_corpus(labeled, out)
    print(f"labeled {sum(0 if d.is_fully_gold() else 1 for d in docs)} documents; wrote {out}")


def stage_build_pairs(config: PipelineConfig) -> None:
    docs = load_corpus(_require(_work(config) / "labeled.jsonl", "label"))
    provider = HashingEmbeddingProvider(config.embedding_dim)
    adapter = make_adapter(config.model, config.family, config.seed)
    budget = TokenBudget(
        family=config.family, max_tokens=config.max_tokens, counter=adapter.count_tokens
    )
    usable = [d for d in docs if d.is_fully_labeled()]
    pairs = build_pairs_for_corpus(
        usable, provider, SummaryConfig(k=config.k, seed=config.seed), budget
    )
    out = _work(config) / "pairs.jsonl"
    save_pairs(pairs, out)
    print(f"built {len(pairs)} pairs from {len(usable)} labeled documents; wrote {out}")


def _make_backend(config: PipelineConfig):
    if config.rewrite_backend == "identity":
        return rewriter_mod.IdentityBackend()
    if config.rewrite_backend == "http":
        if not config.rewrite_url:
            raise ArgGenError("rewrite_backend 'http' requires rewrite_url")
        return rewriter_mod.HttpRewriteBackend(config.rewrite_url)
    raise ArgGenError(f"unknown rewrite backend {config.rewrite_backend!r}")


def stage_rewrite(config: PipelineConfig) -> None:
    pairs = load_pairs(_require(_work(config) / "pairs.jsonl", "build-pairs"))
    backend = _make_backend(config)
    records = []
    for pair in pairs:
        _, (facts_record, argument_record) = rewriter_mod.rewrite_pair(pair, backend)
        records.extend([facts_record, argument_record])
    out = _work(config) / "rewrites.jsonl"
    rewriter_mod.save_records(records, out)
    print(f"rewrote {len(pairs)} pairs ({len(records)} records, all pending); wrote {out}")


def stage_review(config: PipelineConfig, approve_all: bool = False, reject_all: bool = False) -> None:
    rewrites_path = _require(_work(config) / "rewrites.jsonl", "rewrite")
    records = rewriter_mod.load_records(rewrites_path)
    reviewed = []
    for record in records:
        if record.status != "pending":
            reviewed.append(record)
            continue
        if approve_all:
            decision, note = "approved", None
        elif reject_all:
            decision, note = "rejected", None
        else:
            print(rewriter_mod.diff_report(record))
            answer = ""
            while answer not in ("a", "r"):
                answer = input("[a]pprove / [r]eject: ").strip().lower()
            decision = "approved" if answer == "a" else "rejected"
            note = input("note (optional): ").strip() or None
        reviewed.append(rewriter_mod.apply_review(record, decision, note))
    rewriter_mod.save_records(reviewed, rewrites_path)

    pairs = load_pairs(_require(_work(config) / "pairs.jsonl", "build-pairs"))
    resolved = [rewriter_mod.resolve_reviewed_pair(pair, reviewed) for pair in pairs]
    out = _work(config) / "pairs_rewritten.jsonl"
    save_pairs(resolved, out)
    approved = sum(1 for r in reviewed if r.status == "approved")
    print(f"reviewed {len(reviewed)} records ({approved} approved); wrote {out}")


def _split_map(config: PipelineConfig) -> dict[str, str]:
    docs = load_corpus(_require(_work(config) / "labeled.jsonl", "label"))
    return {d.doc_id: d.split for d in docs}


def stage_train(config: PipelineConfig) -> None:
    pairs = load_pairs(_require(_pairs_path(config), "build-pairs" if config.source == "original" else "review"))
    splits = _split_map(config)
    train_pairs = [p for p in pairs if splits.get(p.doc_id) == "train"]
    val_pairs = [p for p in pairs if splits.get(p.doc_id) == "validation"]

    adapter = make_adapter(config.model, config.family, config.seed)
    ft_config = FineTuneConfig(
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        seed=config.seed,
        max_tokens=config.max_tokens,
    )
    trained, manifest = fine_tune_run(train_pairs, val_pairs, adapter, ft_config)

    run_dir = _work(config) / "runs" / manifest.run_id
    checkpoint = run_dir / "checkpoint"
    trained.save(checkpoint)
    manifest = dataclasses.replace(manifest, checkpoint_path=str(checkpoint))
    manifest.save(run_dir / "manifest.json")
    print(f"trained {manifest.model_id} on {len(train_pairs)} pairs; run dir {run_dir}")


def stage_generate(config: PipelineConfig, run_flag: str | None = None) -> None:
    run_dir = _resolve_run_dir(config, run_flag)
    manifest = RunManifest.load(_require(run_dir / "manifest.json", "train"))
    if not manifest.checkpoint_path:
        raise StageDependencyError(run_dir / "checkpoint", stage="train")
    adapter = load_adapter(_require(Path(manifest.checkpoint_path), "train"))
    pairs = load_pairs(_require(_pairs_path(config), "build-pairs"))
    splits = _split_map(config)
    test_pairs = [p for p in pairs if splits.get(p.doc_id) == "test"]
    records = generate_for_test(test_pairs, adapter, manifest, max_new_tokens=config.max_new_tokens)
    out = run_dir / "generations.jsonl"
    save_generations(records, out)
    print(f"generated {len(records)} arguments; wrote {out}")


def stage_evaluate(config: PipelineConfig, run_flag: str | None = None) -> None:
    run_dir = _resolve_run_dir(config, run_flag)
    manifest = RunManifest.load(_require(run_dir / "manifest.json", "train"))
    records = load_generations(_require(run_dir / "generations.jsonl", "generate"))
    provider = HashingEmbeddingProvider(config.embedding_dim)
    report = evaluate_run(
        records,
        provider,
        model_id=manifest.model_id,
        k=manifest.k,
        data_source=manifest.data_source,
        direction=config.overlap_direction,
    )
    save_report(report, run_dir / "report.json", run_dir / "detail.jsonl")
    (run_dir / "report.csv").write_text(render_csv([report]), encoding="utf-8")
    print(render_table([report]), end="")


def stage_report(config: PipelineConfig, run_dirs: list[str], csv_out: str | None = None) -> None:
    reports = []
    for run_dir in run_dirs:
        path = Path(run_dir) / "report.json"
        reports.append(load_report(_require(path, "evaluate"), Path(run_dir) / "detail.jsonl"))
    table = render_table(reports)
    print(table, end="")
    if csv_out:
        Path(csv_out).write_text(render_csv(reports), encoding="utf-8")
        print(f"wrote {csv_out}")


# --- argument parsing -------------------------------------------------------------


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    for field in dataclasses.fields(PipelineConfig):
        flag = "--" + field.name.replace("_", "-")
        if field.type in ("int", "int | None"):
            parser.add_argument(flag, dest=field.name, type=int, default=None)
        elif field.type == "float":
            parser.add_argument(flag, dest=field.name, type=float, default=None)
        else:
            parser.add_argument(flag, dest=field.name, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arggen", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    for name in ("ingest", "label", "build-pairs", "rewrite", "train"):
        sub = commands.add_parser(name)
        _add_config_flags(sub)

    review = commands.add_parser("review")
    _add_config_flags(review)
    review.add_argument("--approve-all", action="store_true")
    review.add_argument("--reject-all", action="store_true")

    for name in ("generate", "evaluate"):
        sub = commands.add_parser(name)
        _add_config_flags(sub)
        sub.add_argument("--run", help="run directory (defaults to the only run in the work dir)")

    report = commands.add_parser("report")
    _add_config_flags(report)
    report.add_argument("--runs", nargs="+", required=True, help="run directories to compare")
    report.add_argument("--csv", help="also write the comparison as CSV")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        f.name: getattr(args, f.name, None) for f in dataclasses.fields(PipelineConfig)
    }
    try:
        config = PipelineConfig.from_sources(args.config, overrides)
        command = args.command
        if command == "report":
            stage_report(config, args.runs, args.csv)
            return 0
        with _work_lock(config):
            if command == "ingest":
                stage_ingest(config)
            elif command == "label":
                stage_label(config)
            elif command == "build-pairs":
                stage_build_pairs(config)
            elif command == "rewrite":
                stage_rewrite(config)
            elif command == "review":
                stage_review(config, args.approve_all, args.reject_all)
            elif command == "train":
                stage_train(config)
            elif command == "generate":
                stage_generate(config, args.run)
            elif command == "evaluate":
                stage_evaluate(config, args.run)
            else:  # unreachable with required subparsers
                raise ArgGenError(f"unknown command {command!r}")
        return 0
    except ArgGenError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
