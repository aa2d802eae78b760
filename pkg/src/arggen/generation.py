"""Fine-tune/generate orchestration producing run manifests and generation records.

A run is one (model, summary length, data source) combination. The manifest
captures everything needed to reproduce it, including a content fingerprint of
the training pairs that is invariant to record order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .adapters import ModelAdapter
from .errors import BudgetViolation, MissingData, ParseError
from .pair_builder import (
    ARGUMENTS_TOKEN,
    FACTS_TOKEN,
    FactArgumentPair,
    TokenBudget,
    fits_budget,
    serialize_example,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FineTuneConfig:
    epochs: int = 20
    learning_rate: float = 3e-3
    batch_size: int = 64
    seed: int = 0
    max_tokens: int | None = None  # None -> family default

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class RunManifest:
    """Identity and reproduction info for one fine-tune/generate run."""

    run_id: str
    model_id: str
    family: str
    k: int
    data_source: str
    config: dict
    dataset_fingerprint: str
    created_at: str
    checkpoint_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "model_id": self.model_id,
            "family": self.family,
            "k": self.k,
            "data_source": self.data_source,
            "config": self.config,
            "dataset_fingerprint": self.dataset_fingerprint,
            "created_at": self.created_at,
            "checkpoint_path": self.checkpoint_path,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "RunManifest":
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__})

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class GenerationRecord:
    """One model output paired with its reference."""

    doc_id: str
    facts_summary: str
    generated_argument: str
    reference_argument: str
    run_id: str


def dataset_fingerprint(pairs: Sequence[FactArgumentPair]) -> str:
    """Content hash of a pair set, stable under record reordering."""
    digests = []
    for pair in pairs:
        payload = "\x1f".join(
            [pair.doc_id, str(pair.k), pair.source, pair.facts_summary, pair.argument_summary]
        )
        digests.append(hashlib.sha256(payload.encode("utf-8")).hexdigest())
    combined = "\n".join(sorted(digests))
    return hashlib.sha256(combined.encode("utf-8")).hexdigest()


def _uniform_k(pairs: Sequence[FactArgumentPair]) -> int:
    ks = {p.k for p in pairs}
    if len(ks) != 1:
        raise ValueError(f"training pairs mix summary lengths: {sorted(ks)}")
    return ks.pop()


def _examples_for_family(pairs: Sequence[FactArgumentPair], family: str, budget: TokenBudget):
    examples = []
    for pair in pairs:
        example = serialize_example(pair, family)
        if not fits_budget(example, budget):
            raise BudgetViolation(
                f"pair {pair.doc_id!r} exceeds the {family} budget of {budget.max_tokens} tokens"
            )
        examples.append(example.text if family == "causal" else (example.source, example.target))
    return examples


def fine_tune_run(
    train_pairs: Sequence[FactArgumentPair],
    val_pairs: Sequence[FactArgumentPair],
    adapter: ModelAdapter,
    config: FineTuneConfig,
    run_id: str | None = None,
) -> tuple[ModelAdapter, RunManifest]:
    """Fine-tune the adapter on serialized pairs and describe the run.

    Pairs must already fit the adapter's token budget; an over-budget example
    is an upstream bug and fails fast. Per-epoch validation loss is logged when
    the adapter reports a training history.
    """
    if not train_pairs:
        raise MissingData("no training pairs")
    k = _uniform_k(train_pairs)
    data_source = "rewritten" if any(p.source == "rewritten" for p in train_pairs) else "original"

    budget = TokenBudget(
        family=adapter.family, max_tokens=config.max_tokens, counter=adapter.count_tokens
    )
    train_examples = _examples_for_family(train_pairs, adapter.family, budget)
    val_examples = _examples_for_family(val_pairs, adapter.family, budget) if val_pairs else None

    trained = adapter.fine_tune(train_examples, config, val_examples)
    for entry in getattr(trained, "history", []):
        logger.info(
            "epoch %s: train_loss=%.4f val_loss=%s",
            entry.get("epoch"),
            entry.get("train_loss", float("nan")),
            f"{entry['val_loss']:.4f}" if "val_loss" in entry else "n/a",
        )

    manifest = RunManifest(
        run_id=run_id or f"{adapter.model_id}-k{k}-{data_source}-seed{config.seed}",
        model_id=adapter.model_id,
        family=adapter.family,
        k=k,
        data_source=data_source,
        config=config.to_dict(),
        dataset_fingerprint=dataset_fingerprint(train_pairs),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    return trained, manifest


def _clean_generation(raw: str, prompt: str) -> str:
    text = raw
    if text.startswith(prompt):
        text = text[len(prompt) :]
    text = text.replace(FACTS_TOKEN, " ").replace(ARGUMENTS_TOKEN, " ")
    return re.sub(r"\s+", " ", text).strip()


def generate_for_test(
    test_pairs: Sequence[FactArgumentPair],
    adapter: ModelAdapter,
    manifest: RunManifest,
    max_new_tokens: int = 256,
) -> list[GenerationRecord]:
    """One GenerationRecord per test pair.

    Prompts end at the argument marker; echoed prompt text and marker tokens
    are stripped from outputs. Empty generations are kept (flagged in the log)
    so they still count against the run's metrics.
    """
    doc_ids = [p.doc_id for p in test_pairs]
    if len(set(doc_ids)) != len(doc_ids):
        raise ValueError("test pairs contain duplicate doc_ids")

    seed = int(manifest.config.get("seed", 0))
    records = []
    for pair in test_pairs:
        prompt = serialize_example(pair, adapter.family).prompt
        raw = adapter.generate(prompt, max_new_tokens=max_new_tokens, seed=seed)
        generated = _clean_generation(raw, prompt)
        if not generated:
            logger.warning("empty generation for document %s", pair.doc_id)
        records.append(
            GenerationRecord(
                doc_id=pair.doc_id,
                facts_summary=pair.facts_summary,
                generated_argument=generated,
                reference_argument=pair.argument_summary,
                run_id=manifest.run_id,
            )
        )
    return records


# --- persistence --------------------------------------------------------------


def save_generations(records: Iterable[GenerationRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(
                json.dumps(
                    {
                        "doc_id": record.doc_id,
                        "facts_summary": record.facts_summary,
                        "generated_argument": record.generated_argument,
                        "reference_argument": record.reference_argument,
                        "run_id": record.run_id,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def load_generations(path) -> list[GenerationRecord]:
    records = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    GenerationRecord(
                        doc_id=str(obj["doc_id"]),
                        facts_summary=str(obj["facts_summary"]),
                        generated_argument=str(obj["generated_argument"]),
                        reference_argument=str(obj["reference_argument"]),
                        run_id=str(obj["run_id"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{line_number}: {exc}", line_number) from exc
    return records
