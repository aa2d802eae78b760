import random

import pytest

from arggen.corpus import CaseDocument, RhetoricalLabel, SentenceRecord
from arggen.embeddings import HashingEmbeddingProvider
from arggen.errors import BudgetTooSmall, MissingRole, SpecialTokenCollision, UnlabeledSentence
from arggen.pair_builder import (
    FactArgumentPair,
    SerializedExample,
    TokenBudget,
    build_pair,
    enforce_budget,
    extract_role_sentences,
    fits_budget,
    load_pairs,
    parse_causal_example,
    save_pairs,
    serialize_example,
    whitespace_tokens,
)
from arggen.summarizer import SummaryConfig


def labeled_doc(label_plan, doc_id="d0"):
    sentences = tuple(
        SentenceRecord(index=i, text=f"Sentence number {i} about the case.", label=label, label_source="gold")
        for i, label in enumerate(label_plan)
    )
    return CaseDocument(doc_id=doc_id, sentences=sentences, provenance="gold_annotated")


F = RhetoricalLabel.FACTS
R = RhetoricalLabel.RATIO_OF_DECISION
S = RhetoricalLabel.STATUTE


class TestExtractRoleSentences:
    def test_direct_filter(self):
        doc = labeled_doc([F, S, R, F])
        facts, ratio = extract_role_sentences(doc)
        assert facts == [doc.sentences[0].text, doc.sentences[3].text]
        assert ratio == [doc.sentences[2].text]

    def test_no_ratio_sentences(self):
        doc = labeled_doc([F, F, S])
        facts, ratio = extract_role_sentences(doc)
        assert len(facts) == 2
        assert ratio == []

    def test_fifty_sentence_plan(self):
        rng = random.Random(8)
        labels = list(RhetoricalLabel)
        plan = [rng.choice(labels) for _ in range(50)]
        doc = labeled_doc(plan)
        facts, ratio = extract_role_sentences(doc)
        assert facts == [doc.sentences[i].text for i, l in enumerate(plan) if l is F]
        assert ratio == [doc.sentences[i].text for i, l in enumerate(plan) if l is R]

    def test_unlabeled_sentence_rejected(self):
        sentences = (
            SentenceRecord(index=0, text="Labeled fact.", label=F, label_source="gold"),
            SentenceRecord(index=1, text="No label here."),
        )
        doc = CaseDocument(doc_id="u", sentences=sentences)
        with pytest.raises(UnlabeledSentence):
            extract_role_sentences(doc)


class TestBuildPair:
    def test_summaries_have_k_sentences(self):
        plan = [F] * 6 + [R] * 7
        doc = labeled_doc(plan)
        provider = HashingEmbeddingProvider(16)
        pair = build_pair(doc, provider, SummaryConfig(k=5, seed=0))
        facts, ratio = extract_role_sentences(doc)
        fact_members = [s for s in facts if s in pair.facts_summary]
        ratio_members = [s for s in ratio if s in pair.argument_summary]
        assert len(fact_members) == 5
        assert len(ratio_members) == 5
        assert pair.source == "original"
        assert pair.rewrite_status == "n/a"
        assert pair.k == 5

    def test_missing_ratio(self):
        doc = labeled_doc([F, F, S])
        with pytest.raises(MissingRole) as excinfo:
            build_pair(doc, HashingEmbeddingProvider(16), SummaryConfig(k=3))
        assert excinfo.value.role == "RatioOfDecision"

    def test_missing_facts(self):
        doc = labeled_doc([R, R])
        with pytest.raises(MissingRole) as excinfo:
            build_pair(doc, HashingEmbeddingProvider(16), SummaryConfig(k=3))
        assert excinfo.value.role == "Facts"

    def test_small_blocks_kept_verbatim(self):
        doc = labeled_doc([F, F, R, R])
        pair = build_pair(doc, HashingEmbeddingProvider(16), SummaryConfig(k=5, seed=0))
        facts, ratio = extract_role_sentences(doc)
        assert pair.facts_summary == " ".join(facts)
        assert pair.argument_summary == " ".join(ratio)


class TestSerializeExample:
    def test_causal_format(self):
        pair = FactArgumentPair(doc_id="d", facts_summary="X.", argument_summary="Y.", k=3)
        example = serialize_example(pair, "causal")
        assert example.text == "[Facts] X. [Arguments] Y."

    def test_seq2seq_format(self):
        pair = FactArgumentPair(doc_id="d", facts_summary="X.", argument_summary="Y.", k=3)
        example = serialize_example(pair, "seq2seq")
        assert example.source == "[Facts] X. [Arguments]"
        assert example.target == "Y."

    def test_inference_prompt_has_no_argument(self):
        pair = FactArgumentPair(doc_id="d", facts_summary="X.", argument_summary="Y.", k=3)
        example = serialize_example(pair, "causal")
        assert example.prompt == "[Facts] X. [Arguments]"
        empty = SerializedExample(doc_id="d", family="causal", facts_summary="X.", argument_summary="")
        assert empty.text == "[Facts] X. [Arguments]"

    def test_marker_collision_rejected(self):
        bad = FactArgumentPair(doc_id="d", facts_summary="contains [Facts] inside", argument_summary="Y.", k=3)
        with pytest.raises(SpecialTokenCollision):
            serialize_example(bad, "causal")
        bad2 = FactArgumentPair(doc_id="d", facts_summary="X.", argument_summary="echoes [Arguments] back", k=3)
        with pytest.raises(SpecialTokenCollision):
            serialize_example(bad2, "seq2seq")

    def test_round_trip_at_arguments_boundary(self):
        rng = random.Random(5)
        words = ["claim", "lease", "court", "award", "notice", "deed"]
        for _ in range(100):
            facts = " ".join(rng.choice(words) for _ in range(rng.randint(1, 20))) + "."
            argument = " ".join(rng.choice(words) for _ in range(rng.randint(1, 20))) + "."
            pair = FactArgumentPair(doc_id="d", facts_summary=facts, argument_summary=argument, k=3)
            text = serialize_example(pair, "causal").text
            assert parse_causal_example(text) == (facts, argument)


class TestEnforceBudget:
    def test_under_budget_unchanged(self):
        pair = FactArgumentPair(
            doc_id="d",
            facts_summary=" ".join(f"w{i}" for i in range(98)) + ".",
            argument_summary="short answer.",
            k=3,
        )
        example = serialize_example(pair, "seq2seq")
        budget = TokenBudget(family="seq2seq", counter=whitespace_tokens)
        assert enforce_budget(example, budget) == example

    def test_facts_lose_trailing_sentences(self):
        sentences = ["S{0}head ".format(j) + " ".join(f"s{j}w{i}" for i in range(199)) + "." for j in range(3)]
        pair = FactArgumentPair(
            doc_id="d",
            facts_summary=" ".join(sentences),
            argument_summary=" ".join(f"a{i}" for i in range(49)) + " end.",
            k=3,
        )
        example = serialize_example(pair, "causal")
        budget = TokenBudget(family="causal", max_tokens=512, counter=whitespace_tokens)
        assert whitespace_tokens(example.text) == 600 + 50 + 2
        trimmed = enforce_budget(example, budget)
        assert whitespace_tokens(trimmed.text) <= 512
        # exactly the last fact sentence is dropped and the argument is intact
        assert trimmed.facts_summary == " ".join(sentences[:2])
        assert trimmed.argument_summary == pair.argument_summary

    def test_budget_too_small(self):
        pair = FactArgumentPair(doc_id="d", facts_summary="X.", argument_summary="Y.", k=3)
        example = serialize_example(pair, "causal")
        budget = TokenBudget(family="causal", max_tokens=4, counter=whitespace_tokens)
        with pytest.raises(BudgetTooSmall):
            enforce_budget(example, budget)

    def test_argument_truncated_as_last_resort(self):
        pair = FactArgumentPair(
            doc_id="d",
            facts_summary="tiny fact.",
            argument_summary=" ".join(f"a{i}" for i in range(40)),
            k=3,
        )
        example = serialize_example(pair, "causal")
        budget = TokenBudget(family="causal", max_tokens=16, counter=whitespace_tokens)
        trimmed = enforce_budget(example, budget)
        assert whitespace_tokens(trimmed.text) <= 16
        assert trimmed.facts_summary == ""  # all fact sentences dropped first
        assert trimmed.argument_summary  # argument survives, shortened

    def test_fuzzed_outputs_never_exceed_budget(self):
        rng = random.Random(99)
        for case in range(1000):
            family = rng.choice(["causal", "seq2seq"])
            max_tokens = 1024 if family == "causal" else 512
            n_fact_sentences = rng.randint(1, 8)
            facts = " ".join(
                "Fact " + " ".join(f"f{w}" for w in range(rng.randint(1, 400))) + "."
                for _ in range(n_fact_sentences)
            )
            argument = " ".join(f"g{w}" for w in range(rng.randint(1, 700))) + "."
            example = SerializedExample(
                doc_id=f"fz{case}", family=family, facts_summary=facts, argument_summary=argument
            )
            budget = TokenBudget(family=family, max_tokens=max_tokens, counter=whitespace_tokens)
            trimmed = enforce_budget(example, budget)
            assert fits_budget(trimmed, budget)


class TestTokenBudgetDefaults:
    def test_family_defaults(self):
        assert TokenBudget(family="causal").max_tokens == 1024
        assert TokenBudget(family="seq2seq").max_tokens == 512

    def test_explicit_max_tokens_kept(self):
        assert TokenBudget(family="causal", max_tokens=64).max_tokens == 64

    def test_counter_counts_whitespace_tokens(self):
        budget = TokenBudget(family="causal")
        assert budget.counter("") == 0
        assert budget.counter("three word text") == 3


class TestPairPersistence:
    def test_round_trip(self, tmp_path):
        rng = random.Random(1)
        pairs = []
        for i in range(100):
            source = rng.choice(["original", "rewritten"])
            pairs.append(
                FactArgumentPair(
                    doc_id=f"p{i}",
                    facts_summary=" ".join(rng.choice(["a", "b", "c"]) for _ in range(rng.randint(1, 30))) + ".",
                    argument_summary=" ".join(rng.choice(["x", "y"]) for _ in range(rng.randint(1, 30))) + ".",
                    k=rng.choice([3, 5]),
                    source=source,
                    rewrite_status="n/a" if source == "original" else rng.choice(["pending", "approved", "rejected"]),
                )
            )
        path = tmp_path / "pairs.jsonl"
        save_pairs(pairs, path)
        assert load_pairs(path) == pairs

    def test_rewritten_pair_requires_status(self):
        with pytest.raises(ValueError):
            FactArgumentPair(doc_id="d", facts_summary="x", argument_summary="y", k=3, source="rewritten")
