"""Build fact/argument training pairs and serialize them under token budgets.

From a fully labeled document we keep the Facts sentences as model input and
the Ratio-of-Decision sentences as the generation target, summarize each block
to k sentences, and serialize with the marker strings "[Facts]" and
"[Arguments]". Serialized examples are trimmed to the model family's token
budget: facts sentences are dropped from the end first, the argument only as a
last resort, the markers never.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .corpus import CaseDocument, RhetoricalLabel, segment_sentences
from .embeddings import EmbeddingProvider
from .errors import (
    BudgetTooSmall,
    MissingRole,
    ParseError,
    SpecialTokenCollision,
    UnlabeledSentence,
)
from .summarizer import SummaryConfig, summarize

logger = logging.getLogger(__name__)

FACTS_TOKEN = "[Facts]"
ARGUMENTS_TOKEN = "[Arguments]"

FAMILIES = ("causal", "seq2seq")
DEFAULT_MAX_TOKENS = {"causal": 1024, "seq2seq": 512}
MIN_MAX_TOKENS = 16

PAIR_SOURCES = ("original", "rewritten")
REWRITE_STATUSES = ("n/a", "pending", "approved", "rejected")


def whitespace_tokens(text: str) -> int:
    """Default token counter; model adapters supply their own."""
    return len(text.split())


@dataclass(frozen=True)
class FactArgumentPair:
    """Summarized facts and argument for one case, with provenance."""

    doc_id: str
    facts_summary: str
    argument_summary: str
    k: int
    source: str = "original"
    rewrite_status: str = "n/a"

    def __post_init__(self):
        if not self.facts_summary.strip() or not self.argument_summary.strip():
            raise ValueError(f"pair {self.doc_id!r}: both summaries must be non-empty")
        if self.source not in PAIR_SOURCES:
            raise ValueError(f"bad source: {self.source!r}")
        if self.rewrite_status not in REWRITE_STATUSES:
            raise ValueError(f"bad rewrite_status: {self.rewrite_status!r}")
        if self.source == "rewritten" and self.rewrite_status == "n/a":
            raise ValueError("rewritten pairs must carry a rewrite_status")


@dataclass
class TokenBudget:
    """Maximum token length for one model family, with the adapter's counter."""

    family: str
    max_tokens: int | None = None
    counter: Callable[[str], int] = whitespace_tokens

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"bad family: {self.family!r}")
        if self.max_tokens is None:
            self.max_tokens = DEFAULT_MAX_TOKENS[self.family]


@dataclass(frozen=True)
class SerializedExample:
    """A pair rendered with marker tokens for one model family.

    Unlike FactArgumentPair, fields may be empty: budget truncation can strip a
    side entirely, and inference-time examples carry no argument.
    """

    doc_id: str
    family: str
    facts_summary: str
    argument_summary: str

    @property
    def prompt(self) -> str:
        """Inference input: everything up to and including the argument marker."""
        return f"{FACTS_TOKEN} {self.facts_summary} {ARGUMENTS_TOKEN}"

    @property
    def text(self) -> str:
        """Single-string training text for causal models."""
        if not self.argument_summary:
            return self.prompt
        return f"{self.prompt} {self.argument_summary}"

    @property
    def source(self) -> str:
        """Encoder input for seq2seq models."""
        return self.prompt

    @property
    def target(self) -> str:
        """Decoder target for seq2seq models."""
        return self.argument_summary


def extract_role_sentences(doc: CaseDocument) -> tuple[list[str], list[str]]:
    """Facts sentences and Ratio-of-Decision sentences, each in document order."""
    facts, ratio = [], []
    for sentence in doc.sentences:
        if sentence.label is None:
            raise UnlabeledSentence(
                f"document {doc.doc_id!r} sentence {sentence.index} is unlabeled"
            )
        if sentence.label is RhetoricalLabel.FACTS:
            facts.append(sentence.text)
        elif sentence.label is RhetoricalLabel.RATIO_OF_DECISION:
            ratio.append(sentence.text)
    return facts, ratio


def build_pair(
    doc: CaseDocument, provider: EmbeddingProvider, config: SummaryConfig
) -> FactArgumentPair:
    """Summarize both role blocks of a labeled document into one pair.

    Raises MissingRole when either block is empty; callers assembling a dataset
    exclude such documents with a warning.
    """
    facts, ratio = extract_role_sentences(doc)
    if not facts:
        raise MissingRole(RhetoricalLabel.FACTS.wire, doc.doc_id)
    if not ratio:
        raise MissingRole(RhetoricalLabel.RATIO_OF_DECISION.wire, doc.doc_id)
    return FactArgumentPair(
        doc_id=doc.doc_id,
        facts_summary=" ".join(summarize(facts, provider, config)),
        argument_summary=" ".join(summarize(ratio, provider, config)),
        k=config.k,
        source="original",
        rewrite_status="n/a",
    )


def _reject_marker_collision(*texts: str) -> None:
    for text in texts:
        if FACTS_TOKEN in text or ARGUMENTS_TOKEN in text:
            raise SpecialTokenCollision(
                f"text contains a reserved marker ({FACTS_TOKEN} / {ARGUMENTS_TOKEN})"
            )


def serialize_example(pair: FactArgumentPair, family: str) -> SerializedExample:
    """Render a pair for one model family.

    Summaries containing the marker strings are rejected so the rendering stays
    injective and parseable.
    """
    if family not in FAMILIES:
        raise ValueError(f"bad family: {family!r}")
    _reject_marker_collision(pair.facts_summary, pair.argument_summary)
    return SerializedExample(
        doc_id=pair.doc_id,
        family=family,
        facts_summary=pair.facts_summary,
        argument_summary=pair.argument_summary,
    )


def parse_causal_example(text: str) -> tuple[str, str]:
    """Recover (facts_summary, argument_summary) from a causal training string."""
    prefix = f"{FACTS_TOKEN} "
    if not text.startswith(prefix):
        raise ParseError(f"causal example does not start with {prefix!r}")
    body = text[len(prefix) :]
    boundary = f" {ARGUMENTS_TOKEN}"
    position = body.find(boundary)
    if position < 0:
        raise ParseError(f"causal example has no {ARGUMENTS_TOKEN} boundary")
    facts = body[:position]
    remainder = body[position + len(boundary) :]
    argument = remainder[1:] if remainder.startswith(" ") else remainder
    return facts, argument


def example_token_count(example: SerializedExample, budget: TokenBudget) -> int:
    """Budget-relevant size: the full string for causal, the larger side for seq2seq."""
    if example.family == "causal":
        return budget.counter(example.text)
    return max(budget.counter(example.source), budget.counter(example.target))


def fits_budget(example: SerializedExample, budget: TokenBudget) -> bool:
    return example_token_count(example, budget) <= budget.max_tokens


def enforce_budget(example: SerializedExample, budget: TokenBudget) -> SerializedExample:
    """Trim an example until it fits the budget.

    Facts sentences are dropped from the end first; if the example still does
    not fit, argument words are dropped from the end. Marker tokens are never
    removed. Raises BudgetTooSmall when the budget cannot hold even the bare
    markers.
    """
    if budget.max_tokens < MIN_MAX_TOKENS:
        raise BudgetTooSmall(f"max_tokens must be >= {MIN_MAX_TOKENS}, got {budget.max_tokens}")
    skeleton = replace(example, facts_summary="", argument_summary="")
    if not fits_budget(skeleton, budget):
        raise BudgetTooSmall(
            f"budget of {budget.max_tokens} cannot hold the marker tokens alone"
        )

    if fits_budget(example, budget):
        return example

    trimmed = example
    fact_sentences = segment_sentences(example.facts_summary) if example.facts_summary.strip() else []
    while fact_sentences and not fits_budget(trimmed, budget):
        fact_sentences = fact_sentences[:-1]
        trimmed = replace(trimmed, facts_summary=" ".join(fact_sentences))

    argument_words = trimmed.argument_summary.split()
    while argument_words and not fits_budget(trimmed, budget):
        argument_words = argument_words[:-1]
        trimmed = replace(trimmed, argument_summary=" ".join(argument_words))

    if not fits_budget(trimmed, budget):
        raise BudgetTooSmall(
            f"example cannot be reduced below {budget.max_tokens} tokens"
        )
    return trimmed


def enforce_pair_budget(pair: FactArgumentPair, budget: TokenBudget) -> FactArgumentPair:
    """Apply enforce_budget to a pair's serialized form and map the result back.

    Raises MissingRole when truncation would empty a side, since no valid
    supervision pair remains.
    """
    example = serialize_example(pair, budget.family)
    trimmed = enforce_budget(example, budget)
    if trimmed == example:
        return pair
    if not trimmed.facts_summary.strip():
        raise MissingRole(RhetoricalLabel.FACTS.wire, pair.doc_id)
    if not trimmed.argument_summary.strip():
        raise MissingRole(RhetoricalLabel.RATIO_OF_DECISION.wire, pair.doc_id)
    return replace(
        pair,
        facts_summary=trimmed.facts_summary,
        argument_summary=trimmed.argument_summary,
    )


def build_pairs_for_corpus(
    docs: Iterable[CaseDocument],
    provider: EmbeddingProvider,
    config: SummaryConfig,
    budget: TokenBudget | None = None,
) -> list[FactArgumentPair]:
    """Build pairs for every document that yields one.

    Documents missing a role block (or emptied by budget truncation) are
    excluded with a logged warning; they carry no usable supervision pair.
    """
    pairs = []
    for doc in docs:
        try:
            pair = build_pair(doc, provider, config)
            if budget is not None:
                pair = enforce_pair_budget(pair, budget)
        except MissingRole as exc:
            logger.warning("excluding document %s: %s", doc.doc_id, exc)
            continue
        pairs.append(pair)
    return pairs


# --- persistence --------------------------------------------------------------


def pair_to_dict(pair: FactArgumentPair) -> dict:
    return {
        "doc_id": pair.doc_id,
        "k": pair.k,
        "source": pair.source,
        "rewrite_status": pair.rewrite_status,
        "facts_summary": pair.facts_summary,
        "argument_summary": pair.argument_summary,
    }


def pair_from_dict(obj: Mapping) -> FactArgumentPair:
    return FactArgumentPair(
        doc_id=str(obj["doc_id"]),
        facts_summary=str(obj["facts_summary"]),
        argument_summary=str(obj["argument_summary"]),
        k=int(obj["k"]),
        source=str(obj["source"]),
        rewrite_status=str(obj["rewrite_status"]),
    )


def save_pairs(pairs: Iterable[FactArgumentPair], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair_to_dict(pair), ensure_ascii=False))
            fh.write("\n")


def load_pairs(path) -> list[FactArgumentPair]:
    pairs = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                pairs.append(pair_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{line_number}: {exc}", line_number) from exc
    return pairs
