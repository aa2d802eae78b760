"""Case corpus: document records, sentence segmentation, splits, JSONL persistence.

A corpus is a list of CaseDocument records, each an ordered list of sentences
with optional rhetorical labels. Documents are persisted one JSON object per
line so corpora stay streamable and diff-friendly.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateId, EmptyDocument, InsufficientGold, ParseError, SplitArity

SPLITS = ("train", "validation", "test", "unassigned")
LABEL_SOURCES = ("gold", "predicted", "none")
PROVENANCES = ("gold_annotated", "auto_labeled")


class RhetoricalLabel(IntEnum):
    """The seven sentence-level rhetorical roles, with stable integer codes."""

    FACTS = 0
    RULING_LOWER = 1
    ARGUMENT = 2
    STATUTE = 3
    PRECEDENT = 4
    RATIO_OF_DECISION = 5
    RULING_PRESENT = 6

    @property
    def wire(self) -> str:
        """Serialized name used in JSONL records."""
        return _LABEL_TO_WIRE[self]

    @classmethod
    def from_wire(cls, name: str) -> "RhetoricalLabel":
        try:
            return _WIRE_TO_LABEL[name]
        except KeyError:
            raise ValueError(f"unknown rhetorical label: {name!r}") from None


_LABEL_TO_WIRE = {
    RhetoricalLabel.FACTS: "Facts",
    RhetoricalLabel.RULING_LOWER: "RulingLower",
    RhetoricalLabel.ARGUMENT: "Argument",
    RhetoricalLabel.STATUTE: "Statute",
    RhetoricalLabel.PRECEDENT: "Precedent",
    RhetoricalLabel.RATIO_OF_DECISION: "RatioOfDecision",
    RhetoricalLabel.RULING_PRESENT: "RulingPresent",
}
_WIRE_TO_LABEL = {v: k for k, v in _LABEL_TO_WIRE.items()}

NUM_LABELS = len(RhetoricalLabel)


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence of a case document.

    ``gold_label`` retains the expert label after automatic relabeling so a
    prediction never overwrites gold data.
    """

    index: int
    text: str
    label: RhetoricalLabel | None = None
    label_source: str = "none"
    gold_label: RhetoricalLabel | None = None

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("sentence text must contain a non-whitespace character")
        if self.label_source not in LABEL_SOURCES:
            raise ValueError(f"bad label_source: {self.label_source!r}")
        if self.label is None and self.label_source != "none":
            raise ValueError("unlabeled sentence must have label_source 'none'")
        if self.label is not None and self.label_source == "none":
            raise ValueError("labeled sentence must have label_source 'gold' or 'predicted'")


@dataclass(frozen=True)
class CaseDocument:
    """One legal case as an ordered sequence of sentences."""

    doc_id: str
    sentences: tuple[SentenceRecord, ...]
    split: str = "unassigned"
    provenance: str = "auto_labeled"

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"bad split: {self.split!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"bad provenance: {self.provenance!r}")
        indices = [s.index for s in self.sentences]
        if indices != list(range(len(indices))):
            raise ValueError(f"document {self.doc_id!r}: sentence indices must be 0..n-1 without gaps")

    @property
    def word_count(self) -> int:
        return sum(len(s.text.split()) for s in self.sentences)

    def is_fully_gold(self) -> bool:
        return bool(self.sentences) and all(s.label_source == "gold" for s in self.sentences)

    def is_fully_labeled(self) -> bool:
        return bool(self.sentences) and all(s.label is not None for s in self.sentences)


@dataclass(frozen=True)
class CorpusStats:
    """Per-split document counts and averages."""

    split: str
    doc_count: int
    avg_words: float
    avg_sentences: float


# --- sentence segmentation ---------------------------------------------------

# Abbreviations that suppress a sentence boundary even before an uppercase
# letter or digit. Matched case-insensitively against the whole token.
ABBREVIATIONS = frozenset(
    {"v.", "vs.", "no.", "sec.", "art.", "hon.", "dr.", "mr.", "mrs.", "sr.", "jr."}
)

_TERMINAL = re.compile(r"[.?!]")
_FOLLOWS_BOUNDARY = re.compile(r"\s+[A-Z0-9]")


def segment_sentences(raw_text: str) -> list[str]:
    """Split raw case text into sentences.

    A boundary is a terminal punctuation mark (. ? !) followed by whitespace
    and an uppercase letter or digit, unless the token ending at the mark is a
    known abbreviation. Non-whitespace characters are preserved exactly.
    """
    if not raw_text or not raw_text.strip():
        raise EmptyDocument("cannot segment empty or whitespace-only text")

    cut_points = []
    for match in _TERMINAL.finditer(raw_text):
        end = match.end()
        if not _FOLLOWS_BOUNDARY.match(raw_text, end):
            continue
        start = end - 1
        while start > 0 and not raw_text[start - 1].isspace():
            start -= 1
        token = raw_text[start:end]
        if token.lower() in ABBREVIATIONS:
            continue
        cut_points.append(end)

    sentences = []
    previous = 0
    for cut in cut_points:
        piece = raw_text[previous:cut].strip()
        if piece:
            sentences.append(piece)
        previous = cut
    tail = raw_text[previous:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# --- persistence --------------------------------------------------------------


def sentence_to_dict(sentence: SentenceRecord) -> dict:
    record = {
        "index": sentence.index,
        "text": sentence.text,
        "label": sentence.label.wire if sentence.label is not None else None,
        "label_source": sentence.label_source,
    }
    if sentence.gold_label is not None:
        record["gold_label"] = sentence.gold_label.wire
    return record


def sentence_from_dict(obj: Mapping) -> SentenceRecord:
    label_name = obj.get("label")
    gold_name = obj.get("gold_label")
    return SentenceRecord(
        index=int(obj["index"]),
        text=str(obj["text"]),
        label=RhetoricalLabel.from_wire(label_name) if label_name is not None else None,
        label_source=str(obj.get("label_source", "none")),
        gold_label=RhetoricalLabel.from_wire(gold_name) if gold_name is not None else None,
    )


def document_to_dict(doc: CaseDocument) -> dict:
    return {
        "doc_id": doc.doc_id,
        "provenance": doc.provenance,
        "split": doc.split,
        "sentences": [sentence_to_dict(s) for s in doc.sentences],
    }


def document_from_dict(obj: Mapping, default_provenance: str | None = None) -> CaseDocument:
    provenance = obj.get("provenance", default_provenance)
    if provenance is None:
        raise ValueError("record is missing 'provenance' and no default was given")
    doc = CaseDocument(
        doc_id=str(obj["doc_id"]),
        sentences=tuple(sentence_from_dict(s) for s in obj["sentences"]),
        split=str(obj.get("split", "unassigned")),
        provenance=str(provenance),
    )
    if doc.provenance == "gold_annotated":
        # every sentence must carry gold evidence, either as its live label or
        # retained in gold_label after automatic relabeling
        for sentence in doc.sentences:
            if sentence.label_source != "gold" and sentence.gold_label is None:
                raise ValueError(
                    f"document {doc.doc_id!r} is gold_annotated but sentence "
                    f"{sentence.index} carries no gold label"
                )
    return doc


def save_corpus(docs: Iterable[CaseDocument], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_dict(doc), ensure_ascii=False))
            fh.write("\n")


def load_corpus(path, provenance: str | None = None) -> list[CaseDocument]:
    """Load a document-per-line JSONL file.

    ``provenance`` fills in records that omit the field. Invalid records raise
    ParseError with the offending line number rather than being skipped.
    """
    docs: list[CaseDocument] = []
    seen: set[str] = set()
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{line_number}: invalid JSON ({exc.msg})", line_number) from exc
            try:
                doc = document_from_dict(obj, default_provenance=provenance)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{line_number}: {exc}", line_number) from exc
            if doc.doc_id in seen:
                raise DuplicateId(f"duplicate doc_id {doc.doc_id!r} at {path}:{line_number}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def load_corpus_dir(directory, provenance: str | None = None) -> list[CaseDocument]:
    """Load every *.jsonl file under a directory, rejecting cross-file duplicates."""
    directory = Path(directory)
    docs: list[CaseDocument] = []
    seen: set[str] = set()
    for path in sorted(directory.glob("*.jsonl")):
        for doc in load_corpus(path, provenance=provenance):
            if doc.doc_id in seen:
                raise DuplicateId(f"duplicate doc_id {doc.doc_id!r} in {path}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


# --- splits and statistics ----------------------------------------------------


def split_corpus(
    docs: Sequence[CaseDocument],
    seed: int,
    counts: Mapping[str, int] | Sequence[int],
) -> list[CaseDocument]:
    """Assign train/validation/test splits.

    Test documents are drawn exclusively from gold-annotated documents so that
    evaluation references are always expert labels. Deterministic given seed.
    """
    if isinstance(counts, Mapping):
        n_train, n_val, n_test = counts["train"], counts["validation"], counts["test"]
    else:
        n_train, n_val, n_test = counts
    if min(n_train, n_val, n_test) < 0:
        raise SplitArity("split counts must be non-negative")
    if n_train + n_val + n_test != len(docs):
        raise SplitArity(
            f"split counts {n_train}+{n_val}+{n_test} do not sum to corpus size {len(docs)}"
        )

    gold_ids = sorted(d.doc_id for d in docs if d.provenance == "gold_annotated")
    if len(gold_ids) < n_test:
        raise InsufficientGold(
            f"need {n_test} gold-annotated documents for the test split, have {len(gold_ids)}"
        )

    rng = random.Random(seed)
    rng.shuffle(gold_ids)
    test_ids = set(gold_ids[:n_test])

    rest_ids = sorted(d.doc_id for d in docs if d.doc_id not in test_ids)
    rng.shuffle(rest_ids)
    train_ids = set(rest_ids[:n_train])
    val_ids = set(rest_ids[n_train : n_train + n_val])

    assigned = []
    for doc in docs:
        if doc.doc_id in test_ids:
            split = "test"
        elif doc.doc_id in train_ids:
            split = "train"
        elif doc.doc_id in val_ids:
            split = "validation"
        else:  # exhaustive when counts sum to |docs|
            split = "unassigned"
        assigned.append(replace(doc, split=split))
    return assigned


def corpus_stats(docs: Sequence[CaseDocument]) -> list[CorpusStats]:
    """Document count and per-document word/sentence averages, one row per non-empty split."""
    rows = []
    for split in SPLITS:
        group = [d for d in docs if d.split == split]
        if not group:
            continue
        rows.append(
            CorpusStats(
                split=split,
                doc_count=len(group),
                avg_words=sum(d.word_count for d in group) / len(group),
                avg_sentences=sum(len(d.sentences) for d in group) / len(group),
            )
        )
    return rows
