import pytest

from reqcomplete.exceptions import PredictionError, QueryTooLong
from reqcomplete.mlm import ScoredPrediction
from reqcomplete.predictions import (
    MaskInstance,
    PredictionRecord,
    basic_filter,
    collect_predictions,
    enumerate_masks,
    recommended_terms,
)
from reqcomplete.text_pipeline import Token, term_set


class FixedBackend:
    def __init__(self, terms):
        self.terms = terms

    def predict(self, query):
        return [ScoredPrediction(t, 1.0 / (i + 2)) for i, t in enumerate(self.terms[: query.k])]


class FailingBackend:
    def predict(self, query):
        raise QueryTooLong(999, 512)


def test_enumerate_masks(pipeline):
    doc = pipeline.parse("The system shall encrypt data.", "d")
    masked = [i.masked_word.surface for i in enumerate_masks(doc)]
    assert {"system", "encrypt", "data"} <= set(masked)
    assert set(masked) <= {"system", "encrypt", "data", "shall"}


def test_no_masks_for_adjectives(pipeline):
    assert enumerate_masks(pipeline.parse("Secure, fast and reliable.", "d")) == []


def test_per_occurrence_masking(pipeline):
    doc = pipeline.parse("The system restarts the system.", "d")
    assert [i.masked_word.surface for i in enumerate_masks(doc)].count("system") == 2


def test_collect_counts(pipeline, stub):
    doc = pipeline.parse("The operator shall export the report.", "d")
    n = len(enumerate_masks(doc))
    assert n == 3
    assert len(collect_predictions(doc, stub, 5, pipeline)) == 15


def test_collect_empty(pipeline, stub):
    assert collect_predictions(pipeline.parse("Secure, fast and reliable.", "d"), stub, 5, pipeline) == []


def test_workers_keep_order(pipeline, stub):
    doc = pipeline.parse("The operator shall export the report. The server stores logs.", "d")
    assert collect_predictions(doc, stub, 4, pipeline, workers=4) == collect_predictions(doc, stub, 4, pipeline)


def test_predictions_are_lemmatized_in_context(pipeline):
    doc = pipeline.parse("The operator shall export the report.", "d")
    recs = collect_predictions(doc, FixedBackend(["networks"]), 1, pipeline)
    noun_slot = [r for r in recs if r.instance.masked_word.surface == "report"][0]
    assert noun_slot.lemma == "network"


def test_gateway_errors_are_wrapped(pipeline):
    doc = pipeline.parse("The operator shall export the report.", "d")
    with pytest.raises(PredictionError) as info:
        collect_predictions(doc, FailingBackend(), 5, pipeline)
    assert isinstance(info.value.instance, MaskInstance)


def _rec(lemma):
    inst = MaskInstance(0, 0, Token("availability", "availability", "NOUN", 0))
    return PredictionRecord(inst, lemma, lemma, 0.5)


def test_basic_filter_examples(wordlists):
    bag = [_rec("system"), _rec("any"), _rec("stability")]
    kept = basic_filter(bag, {"system", "update"}, wordlists)
    assert [r.lemma for r in kept] == ["stability"]


def test_basic_filter_output_disjoint(pipeline, stub, wordlists):
    doc = pipeline.parse("The operator shall export the report. The server stores the logs.", "d")
    kept = basic_filter(collect_predictions(doc, stub, 15, pipeline), term_set(doc), wordlists)
    lemmas = recommended_terms(kept)
    assert not lemmas & term_set(doc)
    assert not lemmas & wordlists.combined


def test_mask_instance_requires_noun_or_verb():
    with pytest.raises(ValueError):
        MaskInstance(0, 0, Token("quick", "quick", "ADJ", 0))
