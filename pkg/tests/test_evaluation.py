import dataclasses

import pytest

from reqcomplete.corpus import DirectoryFetcher
from reqcomplete.evaluation import (
    Resources,
    analyze_disclosed,
    derive_seed,
    pairwise_k_tests,
    run_expi,
    run_expii,
    run_expiii,
    split_document,
    summarize,
    wikipedia_corpus_provider,
)
from reqcomplete.exceptions import TooSmall
from reqcomplete.relevance import train_preset
from reqcomplete.text_pipeline import AnnotatedDocument, Token, novel_terms, term_set

from conftest import synthetic_text


@pytest.fixture(scope="module")
def res(pipeline, stub, wordlists, demo_dir):
    provider = wikipedia_corpus_provider(DirectoryFetcher(demo_dir / "articles"), wordlists=wordlists,
                                         pipeline=pipeline)
    return Resources(stub, wordlists, pipeline=pipeline, corpus_provider=provider)


@pytest.fixture(scope="module")
def demo_docs(pipeline, demo_dir):
    return [pipeline.parse(p.read_text(), p.stem) for p in sorted((demo_dir / "docs").glob("*.txt"))]


def _n_sentence_doc(n):
    sentences = tuple((Token(f"word{chr(97 + i % 26)}", f"word{chr(97 + i % 26)}", "NOUN", 0),) for i in range(n))
    return AnnotatedDocument("d", sentences, "")


def test_split_sizes():
    for n, disclosed in ((24, 12), (25, 13), (2, 1), (3, 2)):
        split = split_document(_n_sentence_doc(n), 0.5, seed=1)
        assert len(split.disclosed.sentences) == disclosed
        assert len(split.withheld.sentences) == n - disclosed


def test_split_partitions_and_is_seeded(pipeline):
    doc = pipeline.parse(synthetic_text(3, 9), "d")
    a, b = split_document(doc, seed=7), split_document(doc, seed=7)
    assert a == b
    key = lambda s: tuple(t.surface for t in s)
    both = sorted(map(key, a.disclosed.sentences + a.withheld.sentences))
    assert both == sorted(map(key, doc.sentences))


def test_split_too_small(pipeline):
    with pytest.raises(TooSmall):
        split_document(pipeline.parse("Only one sentence.", "d"))


def test_derive_seed_is_stable():
    assert derive_seed(0, "expi", "doc", 5) == derive_seed(0, "expi", "doc", 5)
    assert derive_seed(0, "expi", "doc", 5) != derive_seed(1, "expi", "doc", 5)
    assert derive_seed(0, "expi", "doc", 5) >= 0


def test_expi_rows_and_determinism(res, demo_docs):
    reports = run_expi(demo_docs[:2], res, master_seed=0)
    assert len(reports) == 8
    assert reports == run_expi(demo_docs[:2], res, master_seed=0)
    for r in reports:
        assert r.filter_mode == "none"
        assert r.accuracy is None or 0 <= r.accuracy <= 1


def test_coverage_monotone_in_k_for_fixed_split(res, demo_docs):
    split = split_document(demo_docs[0], seed=11)
    novel = novel_terms(term_set(split.withheld), term_set(split.disclosed), res.wordlists)
    from reqcomplete.metrics import coverage_metric

    values = [coverage_metric(analyze_disclosed(split.disclosed, k, res).recommended, novel, res.matcher)
              for k in (5, 10, 15, 20)]
    assert values == sorted(values)


def test_pairwise_tests_have_six_comparisons(res, demo_docs):
    rows = pairwise_k_tests(run_expi(demo_docs, res))
    assert [r["comparison"] for r in rows if r["metric"] == "coverage"] == [
        "5 vs 10", "5 vs 15", "5 vs 20", "10 vs 15", "10 vs 20", "15 vs 20"]


def test_summarize_skips_undefined():
    from reqcomplete.evaluation import EvaluationReport

    reports = [EvaluationReport("a", 5, "none", 0, 0, None, 0.5, 0, 2),
               EvaluationReport("b", 5, "none", 0, 0, 0.2, 0.1, 3, 2)]
    row = summarize(reports)[0]
    assert row["mean_accuracy"] == 0.2 and row["undefined_accuracy"] == 1
    assert row["mean_coverage"] == pytest.approx(0.3)


@pytest.fixture(scope="module")
def expii(res, demo_docs):
    return run_expii(demo_docs, res, folds=3)


def test_expii_table_shape(expii):
    assert len(expii.table) == 15
    assert {(r["option"], r["algorithm"]) for r in expii.table} == {
        (o, a) for o in ("strict", "moderate", "lenient") for a in ("NN", "DT", "LR", "RF", "SVM")}
    assert sorted(f for f, _ in expii.information_gain) == sorted(f"f{i}" for i in range(1, 14))
    assert set(expii.label_counts) == {"relevant", "non-relevant"}
    assert sum(expii.label_counts.values()) == len(expii.dataset)


def test_expiii_counts(res, demo_docs, expii):
    models = {name: train_preset(expii.dataset, name, seed=0) for name in ("strict", "moderate", "lenient")}
    reports = run_expiii(demo_docs[:2], res, models, repeats=5)
    assert sum(r.filter_mode == "none" for r in reports) == 10
    assert sum(r.filter_mode != "none" for r in reports) == 30
    assert reports == run_expiii(demo_docs[:2], res, models, repeats=5)
    base = {(r.doc_id, r.repeat): r for r in reports if r.filter_mode == "none"}
    for r in reports:
        if r.filter_mode != "none":
            assert r.n_recommended <= base[(r.doc_id, r.repeat)].n_recommended
            assert r.classification_accuracy is None or 0 <= r.classification_accuracy <= 1


def test_report_validation():
    from reqcomplete.evaluation import EvaluationReport

    with pytest.raises(ValueError):
        EvaluationReport("a", 5, "none", 0, 0, 1.5, 0.1, 1, 1)
