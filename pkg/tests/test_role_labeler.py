import numpy as np
import pytest

from arggen.corpus import CaseDocument, RhetoricalLabel, SentenceRecord
from arggen.errors import EmptyDocument, MissingData, MissingGoldLabel
from arggen.role_labeler import (
    KeywordEncoder,
    LabelerModel,
    LabelerTrainConfig,
    keyword_baseline_labeler,
    keyword_label,
    label_document,
    per_sentence_accuracy,
    train_labeler,
)
from arggen.synthetic import (
    MARKER_WORDS,
    SEPARABLE_PERMUTATION,
    MarkerIndicatorEncoder,
    make_separable_corpus,
)


def doc_from(texts, labels=None, source="gold", doc_id="d0", provenance="auto_labeled"):
    sentences = []
    for i, text in enumerate(texts):
        label = labels[i] if labels else None
        sentences.append(
            SentenceRecord(
                index=i,
                text=text,
                label=label,
                label_source=source if label is not None else "none",
            )
        )
    return CaseDocument(doc_id=doc_id, sentences=tuple(sentences), provenance=provenance)


class TestKeywordBaseline:
    def test_held_that_maps_to_ratio(self):
        assert keyword_label("It was held that the sale stands.") is RhetoricalLabel.RATIO_OF_DECISION

    def test_section_maps_to_statute(self):
        assert keyword_label("Section 11 bars the suit.") is RhetoricalLabel.STATUTE

    def test_default_is_facts(self):
        assert keyword_label("The parties met in June.") is RhetoricalLabel.FACTS

    def test_labels_whole_document(self):
        doc = doc_from(["It was held that costs follow.", "Section 5 applies.", "They met."])
        labeled = keyword_baseline_labeler(doc)
        assert [s.label for s in labeled.sentences] == [
            RhetoricalLabel.RATIO_OF_DECISION,
            RhetoricalLabel.STATUTE,
            RhetoricalLabel.FACTS,
        ]
        assert all(s.label_source == "predicted" for s in labeled.sentences)


class TestTrainLabeler:
    def test_reaches_perfect_validation_accuracy(self):
        docs = make_separable_corpus(n_docs=40, sentences_per_doc=8, seed=7)
        train, val = docs[:32], docs[32:]
        model = train_labeler(train, val, MarkerIndicatorEncoder(), LabelerTrainConfig(seed=0))
        assert model.best_val_accuracy == 1.0
        assert model.best_epoch <= 50

    def test_predictions_follow_generating_rule(self):
        docs = make_separable_corpus(n_docs=40, sentences_per_doc=8, seed=7)
        model = train_labeler(docs[:32], docs[32:], MarkerIndicatorEncoder(), LabelerTrainConfig(seed=0))
        probe = doc_from(
            [f"A fresh note mentions {marker} here." for marker in MARKER_WORDS],
            labels=None,
        )
        labeled = label_document(probe, model)
        assert [int(s.label) for s in labeled.sentences] == list(SEPARABLE_PERMUTATION)

    def test_no_training_docs(self):
        with pytest.raises(MissingData):
            train_labeler([], [], MarkerIndicatorEncoder())

    def test_unlabeled_training_sentence(self):
        doc = doc_from(["Some sentence without a label."])
        with pytest.raises(MissingGoldLabel):
            train_labeler([doc], [], MarkerIndicatorEncoder())

    def test_same_seed_identical_parameters(self):
        docs = make_separable_corpus(n_docs=12, sentences_per_doc=6, seed=3)
        config = LabelerTrainConfig(seed=21, max_epochs=10, patience=3)
        first = train_labeler(docs[:10], docs[10:], MarkerIndicatorEncoder(), config)
        second = train_labeler(docs[:10], docs[10:], MarkerIndicatorEncoder(), config)
        assert np.array_equal(first.projection, second.projection)
        assert np.array_equal(first.bias, second.bias)
        assert np.array_equal(first.crf.transitions, second.crf.transitions)
        assert np.array_equal(first.crf.start, second.crf.start)
        assert np.array_equal(first.crf.stop, second.crf.stop)


class TestLabelDocument:
    def _trained(self):
        docs = make_separable_corpus(n_docs=20, sentences_per_doc=6, seed=9)
        return train_labeler(docs[:16], docs[16:], MarkerIndicatorEncoder(), LabelerTrainConfig(seed=1))

    def test_one_label_per_sentence(self):
        model = LabelerModel.initial(KeywordEncoder())
        doc = doc_from([f"Sentence number {i} reads plainly." for i in range(5)])
        labeled = label_document(doc, model)
        assert len(labeled.sentences) == 5
        assert all(s.label is not None and s.label_source == "predicted" for s in labeled.sentences)
        assert all(0 <= int(s.label) <= 6 for s in labeled.sentences)

    def test_gold_labels_preserved_alongside_predictions(self):
        doc = doc_from(
            ["It was held that the appeal fails.", "The parties met in May."],
            labels=[RhetoricalLabel.RATIO_OF_DECISION, RhetoricalLabel.FACTS],
            provenance="gold_annotated",
        )
        labeled = label_document(doc, LabelerModel.initial(KeywordEncoder()))
        assert [s.gold_label for s in labeled.sentences] == [
            RhetoricalLabel.RATIO_OF_DECISION,
            RhetoricalLabel.FACTS,
        ]
        assert all(s.label_source == "predicted" for s in labeled.sentences)

    def test_empty_document(self):
        doc = CaseDocument(doc_id="e", sentences=())
        with pytest.raises(EmptyDocument):
            label_document(doc, LabelerModel.initial(KeywordEncoder()))

    def test_trained_model_generalizes(self):
        model = self._trained()
        fresh = make_separable_corpus(n_docs=26, sentences_per_doc=6, seed=99)[20:]
        assert per_sentence_accuracy(model, fresh) == 1.0


class TestArtifactRoundTrip:
    def test_save_load_preserves_predictions(self, tmp_path):
        docs = make_separable_corpus(n_docs=16, sentences_per_doc=6, seed=2)
        encoder = MarkerIndicatorEncoder()
        model = train_labeler(docs[:12], docs[12:], encoder, LabelerTrainConfig(seed=4, max_epochs=20))
        path = tmp_path / "labeler.json"
        model.save(path)
        restored = LabelerModel.load(path, encoder)
        probe = [s.text for s in docs[0].sentences]
        assert restored.decode(probe) == model.decode(probe)
        assert np.allclose(restored.projection, model.projection)
        assert restored.best_val_accuracy == model.best_val_accuracy
