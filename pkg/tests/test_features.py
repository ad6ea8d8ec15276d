import random

import numpy as np
import pytest

from reqcomplete.corpus import CorpusStats, DomainCorpus, compute_stats
from reqcomplete.features import (
    FEATURES,
    SCHEMA_VERSION,
    FeatureEncoder,
    FeatureMatrix,
    build_matrix,
    compute_vector,
    pos_in_context,
    prediction_deciles,
)
from reqcomplete.predictions import PredictionRecord, basic_filter, collect_predictions, enumerate_masks
from reqcomplete.similarity import EmbeddingStore
from reqcomplete.text_pipeline import term_set

R1 = "Update shall not compromise the availability of the service."


@pytest.fixture()
def r1(pipeline):
    doc = pipeline.parse(R1, "r1")
    inst = [i for i in enumerate_masks(doc) if i.masked_word.surface == "availability"][0]
    return doc, inst


def test_pos_in_context(pipeline, r1):
    doc, inst = r1
    assert pos_in_context(PredictionRecord(inst, "stability", "stability", 0.3), doc, pipeline) == "NOUN"
    assert pos_in_context(PredictionRecord(inst, "availability", "availability", 0.3), doc, pipeline) == inst.masked_word.pos
    assert pos_in_context(PredictionRecord(inst, "quickly", "quickly", 0.3), doc, pipeline) == "ADV"


def test_length_features(pipeline, r1):
    doc, inst = r1
    rec = PredictionRecord(inst, "stability", "stability", 0.25)
    vec = compute_vector(rec, doc, {"stability": 0}, CorpusStats.empty(), EmbeddingStore(), pipeline)
    assert (vec.f4, vec.f5, vec.f6) == (12, 9, 0.75)
    assert vec.f7 == 0.25
    assert vec.f8 == 5  # avail -> st: three deletions, two substitutions
    assert vec.f9 is None
    assert (vec.f10, vec.f11, vec.f12, vec.f13) == (0, 9, 0.0, 0.0)


def test_similarity_feature_uses_store(pipeline, r1):
    doc, inst = r1
    store = EmbeddingStore({"availability": [1.0, 0.0], "stability": [0.6, 0.8]})
    vec = compute_vector(PredictionRecord(inst, "stability", "stability", 0.2), doc, {}, CorpusStats.empty(), store,
                         pipeline)
    assert vec.f9 == pytest.approx(0.6)


def test_repeat_of_masked_word_rejected(pipeline, r1):
    doc, inst = r1
    with pytest.raises(ValueError):
        compute_vector(PredictionRecord(inst, "availability", "availability", 0.2), doc, {}, CorpusStats.empty(),
                       EmbeddingStore(), pipeline)


def test_most_frequent_prediction_is_decile_zero(r1):
    _, inst = r1
    bag = [PredictionRecord(inst, w, w, 0.1) for w in ["a"] * 5 + ["b", "c", "d", "e", "f", "g"]]
    assert prediction_deciles(bag)["a"] == 0


def _demo_matrix(pipeline, stub, wordlists, shuffle_seed=None):
    doc = pipeline.parse("The operator shall export the daily report. The server stores logs of every request.", "d")
    raw = collect_predictions(doc, stub, 10, pipeline)
    kept = basic_filter(raw, term_set(doc), wordlists)
    if shuffle_seed is not None:
        raw = list(raw)
        random.Random(shuffle_seed).shuffle(raw)
    stats = compute_stats(DomainCorpus((("Log", "A log records server events and requests."),
                                        ("Report", "A report summarizes events for an operator.")), "d", ""), pipeline)
    return build_matrix(kept, doc, stats, EmbeddingStore(), all_preds=raw, pipeline=pipeline)


def test_matrix_invariants(pipeline, stub, wordlists):
    m = _demo_matrix(pipeline, stub, wordlists)
    assert len(m) > 0
    for row in m.rows:
        v = row.vector
        assert v.f6 == min(v.f4, v.f5) / max(v.f4, v.f5)
        assert v.f12 <= v.f13
        assert 0 <= v.f10 <= 9 and 0 <= v.f11 <= 9


def test_f10_invariant_under_shuffling(pipeline, stub, wordlists):
    a = _demo_matrix(pipeline, stub, wordlists)
    b = _demo_matrix(pipeline, stub, wordlists, shuffle_seed=3)
    assert [r.vector.f10 for r in a.rows] == [r.vector.f10 for r in b.rows]


def test_csv_round_trip(tmp_path, pipeline, stub, wordlists):
    m = _demo_matrix(pipeline, stub, wordlists)
    m = m.with_labels(["relevant" if i % 3 == 0 else "non-relevant" for i in range(len(m))])
    path = tmp_path / "m.csv"
    m.to_csv(path)
    back = FeatureMatrix.from_csv(path)
    assert back.schema_version == SCHEMA_VERSION
    assert back.rows == m.rows


def test_empty_matrix(tmp_path, pipeline):
    doc = pipeline.parse("The system runs.", "d")
    m = build_matrix([], doc, CorpusStats.empty(), EmbeddingStore(), pipeline=pipeline)
    assert len(m) == 0
    path = tmp_path / "empty.csv"
    m.to_csv(path)
    assert path.read_text().startswith(f"# schema={SCHEMA_VERSION}")
    assert len(FeatureMatrix.from_csv(path)) == 0
    assert FeatureEncoder().fit_transform(m).shape == (0, 22)


def test_encoder_layout(pipeline, stub, wordlists):
    m = _demo_matrix(pipeline, stub, wordlists)
    enc = FeatureEncoder().fit(m)
    X = enc.transform(m)
    names = list(enc.get_feature_names_out())
    assert X.shape == (len(m), len(names)) == (len(m), 22)
    assert np.all(X[:, :5].sum(axis=1) == 1) and np.all(X[:, 5:10].sum(axis=1) == 1)
    missing = X[:, names.index("f9_missing")]
    assert np.all(missing == 1)  # empty store: similarity is undefined everywhere
    assert list(m.features().columns) == list(FEATURES)
