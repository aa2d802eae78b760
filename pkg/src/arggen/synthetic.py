"""Deterministic synthetic data for demos, smoke runs, and learnability checks.

Three generators, each seeded:

* make_smoke_corpus: a mixed gold/auto corpus whose gold documents pair every
  reasoning sentence with a facts sentence built from the same words, so an
  adapter that answers with the facts achieves full word overlap against the
  reference. Auto documents carry keyword cues for the rule-based labeler.
* make_separable_corpus: documents whose labels are a fixed permutation of a
  marker word embedded in each sentence, paired with MarkerIndicatorEncoder;
  a labeler must learn the marker-to-label mapping to score well.
* make_templated_pairs: fact/argument pairs from a small topic table where the
  topic phrase closes the facts text and selects a canned argument, so a small
  sequence model can learn the mapping by memorizing continuations.
"""

from __future__ import annotations

import argparse
import random
from pathlib import Path

import numpy as np

from .corpus import CaseDocument, RhetoricalLabel, SentenceRecord, save_corpus
from .pair_builder import FactArgumentPair

# --- smoke corpus ---------------------------------------------------------------

_PARTIES = ("tenant", "landlord", "vendor", "purchaser", "insurer", "claimant",
            "employer", "workman", "trustee", "borrower")
_OBJECTS = ("lease", "conveyance", "policy", "award", "mortgage", "licence",
            "settlement", "tender")
_EVENTS = ("default", "notice", "inspection", "demand", "hearing", "survey",
           "payment", "transfer")

_FACT_TEMPLATES = (
    "The {party} filed the {obj} dispute after the {event}.",
    "A {event} followed the {obj} between the {party} and the {party2}.",
    "The {party} received the {event} about the {obj} last year.",
    "After the {event} the {party} questioned the {obj} terms.",
)

_AUTO_TEMPLATES = (
    "The {party} reported the {event} concerning the {obj}.",
    "The court held that the {event} was decisive for the {obj}.",
    "Section {num} of the act covers the {obj}.",
    "The trial court rejected the {obj} plea.",
    "Counsel contended that the {event} was immaterial.",
    "The {party} disclosed the {event} during the {obj} review.",
    "The court held that the {party} must honour the {obj}.",
)


def _capitalize(text: str) -> str:
    return text[0].upper() + text[1:]


def _shuffled_variant(sentence: str, rng: random.Random) -> str:
    """Same words as the input sentence, reordered; token set is preserved."""
    words = sentence.rstrip(".").split()
    rng.shuffle(words)
    return _capitalize(" ".join(words)) + "."


def _gold_smoke_doc(doc_id: str, rng: random.Random) -> CaseDocument:
    def fill(template: str) -> str:
        return template.format(
            party=rng.choice(_PARTIES),
            party2=rng.choice(_PARTIES),
            obj=rng.choice(_OBJECTS),
            event=rng.choice(_EVENTS),
        )

    facts = [fill(t) for t in _FACT_TEMPLATES]
    ratio = [_shuffled_variant(f, rng) for f in facts]
    other = [
        ("The trial court decreed the suit.", RhetoricalLabel.RULING_LOWER),
        (f"Counsel contended that the {rng.choice(_OBJECTS)} was invalid.", RhetoricalLabel.ARGUMENT),
        (f"Section {rng.randint(2, 40)} of the act governs the {rng.choice(_OBJECTS)}.", RhetoricalLabel.STATUTE),
        ("The bench relied on Rao v. Mehta.", RhetoricalLabel.PRECEDENT),
        ("The appeal is dismissed with costs.", RhetoricalLabel.RULING_PRESENT),
    ]

    labeled = [(text, RhetoricalLabel.FACTS) for text in facts]
    labeled += other[:4]
    labeled += [(text, RhetoricalLabel.RATIO_OF_DECISION) for text in ratio]
    labeled.append(other[4])

    sentences = tuple(
        SentenceRecord(index=i, text=text, label=label, label_source="gold")
        for i, (text, label) in enumerate(labeled)
    )
    return CaseDocument(doc_id=doc_id, sentences=sentences, provenance="gold_annotated")


def _auto_smoke_doc(doc_id: str, rng: random.Random) -> CaseDocument:
    texts = []
    for template in _AUTO_TEMPLATES:
        texts.append(
            template.format(
                party=rng.choice(_PARTIES),
                obj=rng.choice(_OBJECTS),
                event=rng.choice(_EVENTS),
                num=rng.randint(2, 40),
            )
        )
    sentences = tuple(
        SentenceRecord(index=i, text=text, label=None, label_source="none")
        for i, text in enumerate(texts)
    )
    return CaseDocument(doc_id=doc_id, sentences=sentences, provenance="auto_labeled")


def make_smoke_corpus(n_gold: int = 50, n_auto: int = 50, seed: int = 13) -> list[CaseDocument]:
    rng = random.Random(seed)
    docs = [_gold_smoke_doc(f"gold-{i:03d}", rng) for i in range(n_gold)]
    docs += [_auto_smoke_doc(f"auto-{i:03d}", rng) for i in range(n_auto)]
    return docs


# --- separable labeling corpus ----------------------------------------------------

MARKER_WORDS = ("alphax", "bravox", "charliex", "deltax", "foxtrotx", "sierrax", "tangox")

# marker index -> label code; a derangement, so the identity mapping scores 0
SEPARABLE_PERMUTATION = (3, 5, 0, 6, 2, 4, 1)

# skewed marker frequencies; frequent markers are learned first, which keeps
# validation accuracy improving steadily instead of jumping once at the end
_MARKER_WEIGHTS = (8, 6, 5, 4, 3, 2, 2)

_FILLERS = ("first", "second", "annexed", "supplementary", "certified", "disputed",
            "original", "amended", "interim", "final")


class MarkerIndicatorEncoder:
    """Emission row is a one-hot indicator of which marker word a sentence contains.

    The indicator lives in marker-index space, not label space, so a labeler
    must learn the marker-to-label mapping.
    """

    def __init__(self, scale: float = 4.0):
        self.scale = scale
        self.encoder_id = f"marker-indicator-v1(scale={scale})"

    def encode(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), len(MARKER_WORDS)))
        for row, text in enumerate(texts):
            for marker_index, marker in enumerate(MARKER_WORDS):
                if marker in text:
                    out[row, marker_index] = self.scale
                    break
        return out


def make_separable_corpus(
    n_docs: int = 40, sentences_per_doc: int = 8, seed: int = 7
) -> list[CaseDocument]:
    rng = random.Random(seed)
    marker_indices = range(len(MARKER_WORDS))
    docs = []
    for doc_index in range(n_docs):
        sentences = []
        for sentence_index in range(sentences_per_doc):
            marker_index = rng.choices(marker_indices, weights=_MARKER_WEIGHTS)[0]
            text = (
                f"The {rng.choice(_FILLERS)} record notes {MARKER_WORDS[marker_index]} "
                f"in paragraph {rng.randint(1, 60)}."
            )
            sentences.append(
                SentenceRecord(
                    index=sentence_index,
                    text=text,
                    label=RhetoricalLabel(SEPARABLE_PERMUTATION[marker_index]),
                    label_source="gold",
                )
            )
        docs.append(
            CaseDocument(
                doc_id=f"sep-{doc_index:03d}",
                sentences=tuple(sentences),
                provenance="gold_annotated",
            )
        )
    return docs


# --- templated generation pairs -----------------------------------------------------

_TOPIC_TABLE = (
    ("unpaid rent arrears",
     "The tenancy claim succeeds because rent arrears remained unpaid despite notice."),
    ("defamation by publication",
     "The defamation plea fails because the publication was a fair comment."),
    ("breach of a supply contract",
     "The contract claim succeeds because the supplier broke the delivery term."),
    ("a negligent road accident",
     "The negligence claim succeeds because the driver ignored a duty of care."),
    ("wrongful dismissal from service",
     "The dismissal is set aside because the inquiry violated natural justice."),
    ("trespass on farmland",
     "The trespass claim succeeds because possession of the farmland was proved."),
)

_TRAIN_NAMES = ("Asha", "Vikram", "Meera", "Rohan", "Kavita", "Arjun", "Divya", "Suresh")
_HELDOUT_NAMES = ("Nisha", "Tarun", "Priya", "Manoj")


def _templated_pair(doc_id: str, topic_index: int, names: tuple[str, ...], rng: random.Random) -> FactArgumentPair:
    plaintiff, defendant = rng.sample(names, 2)
    topic_phrase, argument = _TOPIC_TABLE[topic_index]
    facts = (
        f"{plaintiff} approached the court against {defendant}. "
        f"The dispute centres on {topic_phrase}."
    )
    return FactArgumentPair(
        doc_id=doc_id,
        facts_summary=facts,
        argument_summary=argument,
        k=3,
    )


def make_templated_pairs(
    n_train: int = 30, n_heldout: int = 12, seed: int = 5
) -> tuple[list[FactArgumentPair], list[FactArgumentPair]]:
    """Train and held-out pairs over the same topics but disjoint party names."""
    rng = random.Random(seed)
    train = [
        _templated_pair(f"tmpl-train-{i:03d}", i % len(_TOPIC_TABLE), _TRAIN_NAMES, rng)
        for i in range(n_train)
    ]
    heldout = [
        _templated_pair(f"tmpl-held-{i:03d}", i % len(_TOPIC_TABLE), _HELDOUT_NAMES, rng)
        for i in range(n_heldout)
    ]
    return train, heldout


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a demo corpus as JSONL.")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--gold", type=int, default=50)
    parser.add_argument("--auto", type=int, default=50)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    docs = make_smoke_corpus(n_gold=args.gold, n_auto=args.auto, seed=args.seed)
    save_corpus(docs, out / "cases.jsonl")
    print(f"wrote {len(docs)} documents to {out / 'cases.jsonl'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
