"""Rhetorical role labeling: encoder contract, CRF training, and inference.

The labeler is hierarchical: a sentence encoder maps each sentence to a row of
per-label emission scores, and a linear-chain CRF over the sentence sequence
decodes a coherent label sequence. Encoders are pluggable so tiny deterministic
encoders can stand in for heavyweight neural ones at test scale.

The trained artifact holds a square emission projection (initialized to the
identity, so an untrained model scores with the raw encoder emissions) plus the
chain parameters; both are updated by mini-batch gradient descent on the mean
per-document negative log-likelihood.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from . import crf as crf_ops
from .corpus import NUM_LABELS, CaseDocument, RhetoricalLabel, SentenceRecord
from .crf import CrfParameters
from .errors import EmptyDocument, MissingData, MissingGoldLabel

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1


class SentenceEncoder(Protocol):
    """Maps sentence texts to an (n, L) matrix of unnormalized emission scores.

    Implementations must be deterministic for fixed parameters and return one
    row per input sentence.
    """

    encoder_id: str

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


# Ordered keyword rules shared by the baseline labeler and the keyword encoder.
# First match wins; sentences matching nothing default to FACTS.
KEYWORD_RULES: tuple[tuple[str, RhetoricalLabel], ...] = (
    ("held that", RhetoricalLabel.RATIO_OF_DECISION),
    ("section", RhetoricalLabel.STATUTE),
    ("trial court", RhetoricalLabel.RULING_LOWER),
    ("high court", RhetoricalLabel.RULING_LOWER),
    ("counsel", RhetoricalLabel.ARGUMENT),
    ("contended", RhetoricalLabel.ARGUMENT),
    ("submitted that", RhetoricalLabel.ARGUMENT),
    (" v. ", RhetoricalLabel.PRECEDENT),
    ("relied on", RhetoricalLabel.PRECEDENT),
    ("appeal is dismissed", RhetoricalLabel.RULING_PRESENT),
    ("appeal is allowed", RhetoricalLabel.RULING_PRESENT),
    ("we dismiss", RhetoricalLabel.RULING_PRESENT),
    ("we allow", RhetoricalLabel.RULING_PRESENT),
)


def keyword_label(text: str) -> RhetoricalLabel:
    lowered = text.lower()
    for needle, label in KEYWORD_RULES:
        if needle in lowered:
            return label
    return RhetoricalLabel.FACTS


class KeywordEncoder:
    """Deterministic rule-based encoder: a spike on the keyword-matched label."""

    def __init__(self, scale: float = 2.0):
        self.scale = scale
        self.encoder_id = f"keyword-v1(scale={scale})"

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        emissions = np.zeros((len(texts), NUM_LABELS))
        for row, text in enumerate(texts):
            emissions[row, int(keyword_label(text))] = self.scale
        return emissions


@dataclass
class LabelerTrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 4  # documents per step
    max_epochs: int = 100
    patience: int = 10  # validation checks without improvement before stopping
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
        }


@dataclass
class LabelerModel:
    """Trained labeler: emission projection + chain parameters + encoder handle."""

    encoder: SentenceEncoder
    projection: np.ndarray  # (L, L), identity before training
    bias: np.ndarray  # (L,)
    crf: CrfParameters
    config: LabelerTrainConfig = field(default_factory=LabelerTrainConfig)
    best_val_accuracy: float = 0.0
    best_epoch: int = 0

    @classmethod
    def initial(cls, encoder: SentenceEncoder, config: LabelerTrainConfig | None = None) -> "LabelerModel":
        return cls(
            encoder=encoder,
            projection=np.eye(NUM_LABELS),
            bias=np.zeros(NUM_LABELS),
            crf=CrfParameters.zeros(NUM_LABELS),
            config=config or LabelerTrainConfig(),
        )

    def emissions(self, texts: Sequence[str]) -> np.ndarray:
        raw = np.asarray(self.encoder.encode(texts), dtype=np.float64)
        if raw.shape != (len(texts), NUM_LABELS):
            raise ValueError(f"encoder returned shape {raw.shape}, expected ({len(texts)}, {NUM_LABELS})")
        return raw @ self.projection + self.bias

    def decode(self, texts: Sequence[str]) -> list[int]:
        labels, _ = crf_ops.viterbi_decode(self.emissions(texts), self.crf)
        return labels

    # -- persistence ----------------------------------------------------------

    def save(self, path) -> None:
        payload = {
            "version": ARTIFACT_VERSION,
            "meta": {
                "num_labels": NUM_LABELS,
                "encoder_id": self.encoder.encoder_id,
                "config": self.config.to_dict(),
                "best_val_accuracy": self.best_val_accuracy,
                "best_epoch": self.best_epoch,
            },
            "params": {
                "projection": self.projection.tolist(),
                "bias": self.bias.tolist(),
                "transitions": self.crf.transitions.tolist(),
                "start": self.crf.start.tolist(),
                "stop": self.crf.stop.tolist(),
            },
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path, encoder: SentenceEncoder) -> "LabelerModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported labeler artifact version: {payload.get('version')}")
        meta, params = payload["meta"], payload["params"]
        if meta["encoder_id"] != encoder.encoder_id:
            logger.warning(
                "artifact was trained with encoder %s but loaded with %s",
                meta["encoder_id"],
                encoder.encoder_id,
            )
        return cls(
            encoder=encoder,
            projection=np.asarray(params["projection"], dtype=np.float64),
            bias=np.asarray(params["bias"], dtype=np.float64),
            crf=CrfParameters(
                transitions=np.asarray(params["transitions"]),
                start=np.asarray(params["start"]),
                stop=np.asarray(params["stop"]),
            ),
            config=LabelerTrainConfig(**meta["config"]),
            best_val_accuracy=float(meta["best_val_accuracy"]),
            best_epoch=int(meta["best_epoch"]),
        )


def _gold_codes(doc: CaseDocument) -> np.ndarray:
    codes = []
    for sentence in doc.sentences:
        if sentence.label is None or sentence.label_source != "gold":
            raise MissingGoldLabel(
                f"document {doc.doc_id!r} sentence {sentence.index} has no gold label"
            )
        codes.append(int(sentence.label))
    return np.asarray(codes, dtype=np.int64)


def per_sentence_accuracy(model: LabelerModel, docs: Sequence[CaseDocument]) -> float:
    correct = total = 0
    for doc in docs:
        gold = _gold_codes(doc)
        predicted = model.decode([s.text for s in doc.sentences])
        correct += int(np.sum(np.asarray(predicted) == gold))
        total += len(gold)
    return correct / total if total else 0.0


def train_labeler(
    train_docs: Sequence[CaseDocument],
    val_docs: Sequence[CaseDocument],
    encoder: SentenceEncoder,
    config: LabelerTrainConfig | None = None,
) -> LabelerModel:
    """Fit the labeler by mini-batch gradient descent on mean per-document NLL.

    Keeps the checkpoint with the best validation per-sentence accuracy and
    stops early after ``patience`` stagnant validation checks. Deterministic
    given the seed and a fixed encoder. Falls back to the training documents
    for the accuracy check when ``val_docs`` is empty.
    """
    config = config or LabelerTrainConfig()
    if not train_docs:
        raise MissingData("no training documents")

    # Cache raw encoder emissions; the encoder is fixed during training.
    cached = []
    for doc in train_docs:
        texts = [s.text for s in doc.sentences]
        cached.append((np.asarray(encoder.encode(texts), dtype=np.float64), _gold_codes(doc)))

    check_docs = val_docs if val_docs else train_docs
    for doc in check_docs:
        _gold_codes(doc)  # fail fast on unlabeled validation data

    model = LabelerModel.initial(encoder, config)
    rng = np.random.default_rng(config.seed)

    best = {
        "accuracy": per_sentence_accuracy(model, check_docs),
        "epoch": 0,
        "projection": model.projection.copy(),
        "bias": model.bias.copy(),
        "crf": model.crf.copy(),
    }
    stagnant = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(cached))
        for batch_start in range(0, len(order), config.batch_size):
            batch = order[batch_start : batch_start + config.batch_size]
            d_proj = np.zeros_like(model.projection)
            d_bias = np.zeros_like(model.bias)
            d_trans = np.zeros_like(model.crf.transitions)
            d_start = np.zeros_like(model.crf.start)
            d_stop = np.zeros_like(model.crf.stop)
            for idx in batch:
                raw, gold = cached[idx]
                emissions = raw @ model.projection + model.bias
                _, grads = crf_ops.nll_and_gradient(emissions, model.crf, gold)
                d_proj += raw.T @ grads.emissions
                d_bias += grads.emissions.sum(axis=0)
                d_trans += grads.transitions
                d_start += grads.start
                d_stop += grads.stop
            scale = config.learning_rate / len(batch)
            model.projection -= scale * d_proj
            model.bias -= scale * d_bias
            model.crf.transitions -= scale * d_trans
            model.crf.start -= scale * d_start
            model.crf.stop -= scale * d_stop

        accuracy = per_sentence_accuracy(model, check_docs)
        if accuracy > best["accuracy"]:
            best = {
                "accuracy": accuracy,
                "epoch": epoch,
                "projection": model.projection.copy(),
                "bias": model.bias.copy(),
                "crf": model.crf.copy(),
            }
            stagnant = 0
        else:
            stagnant += 1
        logger.debug("epoch %d: val accuracy %.4f (best %.4f)", epoch, accuracy, best["accuracy"])
        if best["accuracy"] >= 1.0 or stagnant >= config.patience:
            break

    model.projection = best["projection"]
    model.bias = best["bias"]
    model.crf = best["crf"]
    model.best_val_accuracy = best["accuracy"]
    model.best_epoch = best["epoch"]
    return model


def label_document(doc: CaseDocument, model: LabelerModel) -> CaseDocument:
    """Predict a label for every sentence.

    Existing gold labels are kept in the sentence's ``gold_label`` field;
    predictions never overwrite them.
    """
    if not doc.sentences:
        raise EmptyDocument(f"document {doc.doc_id!r} has no sentences")
    predicted = model.decode([s.text for s in doc.sentences])
    return _with_predictions(doc, predicted)


def keyword_baseline_labeler(doc: CaseDocument) -> CaseDocument:
    """Pure keyword-rule labeler, usable without any training."""
    if not doc.sentences:
        raise EmptyDocument(f"document {doc.doc_id!r} has no sentences")
    predicted = [int(keyword_label(s.text)) for s in doc.sentences]
    return _with_predictions(doc, predicted)


def _with_predictions(doc: CaseDocument, predicted: Sequence[int]) -> CaseDocument:
    sentences = []
    for sentence, code in zip(doc.sentences, predicted):
        gold = sentence.gold_label
        if sentence.label_source == "gold":
            gold = sentence.label
        sentences.append(
            SentenceRecord(
                index=sentence.index,
                text=sentence.text,
                label=RhetoricalLabel(code),
                label_source="predicted",
                gold_label=gold,
            )
        )
    return replace(doc, sentences=tuple(sentences))
