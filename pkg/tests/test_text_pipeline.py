import pytest
from hypothesis import given, settings, strategies as st

from reqcomplete.text_pipeline import (
    AnnotatedDocument,
    Token,
    Wordlists,
    load_pipeline,
    novel_terms,
    parse_document,
    term_set,
)


def tok(surface, lemma=None, pos="NOUN", offset=0):
    return Token(surface, lemma or surface.lower(), pos, offset)


def test_single_sentence(pipeline):
    doc = pipeline.parse("The system shall report errors.", "d")
    assert len(doc.sentences) == 1
    tags = {t.surface: t for t in doc.tokens()}
    assert tags["system"].pos == "NOUN"
    assert tags["shall"].pos in {"VERB", "OTHER"}
    assert tags["report"].lemma == "report"


def test_two_fragments(pipeline):
    assert len(pipeline.parse("A. B.", "d").sentences) == 2


def test_lemmas_of_run(pipeline):
    doc = pipeline.parse("running ran", "d")
    assert [t.lemma for t in doc.tokens()] == ["run", "run"]


def test_requirement_labels_do_not_split(pipeline):
    doc = pipeline.parse("R1. The user shall log in. R2. The system shall lock the account.", "d")
    assert len(doc.sentences) == 2
    assert "r1" not in term_set(doc)


def test_plural_noun_after_determiner(pipeline):
    tokens = pipeline.annotate_words(["The", "logs", "are", "kept"])
    assert tokens[1].pos == "NOUN" and tokens[1].lemma == "log"


def test_noun_verb_ambiguity(pipeline):
    assert pipeline.annotate_words(["The", "user", "reports", "errors"])[2].pos == "VERB"
    assert pipeline.annotate_words(["Error", "reports", "are", "stored"])[1].pos == "NOUN"


def test_offsets_point_into_source(pipeline):
    text = "The operator shall export the daily report.\n\nBackups run nightly."
    doc = pipeline.parse(text, "d")
    for t in doc.tokens():
        assert text[t.char_offset:t.char_offset + len(t.surface)] == t.surface


def test_subset_rebuilds_offsets(pipeline):
    doc = pipeline.parse("First sentence here. Second one follows. Third ends it.", "d")
    sub = doc.subset([2, 0], "s")
    assert len(sub.sentences) == 2
    for t in sub.tokens():
        assert sub.source_text[t.char_offset:t.char_offset + len(t.surface)] == t.surface


def test_term_set_examples():
    assert term_set([tok("run"), tok("ran", "run"), tok("running", "run")]) == {"run"}
    assert term_set([tok("network"), tok("networks", "network"), tok("security")]) == {"network", "security"}
    assert term_set([]) == frozenset()


def test_term_set_skips_punctuation_and_numbers():
    assert term_set([tok("."), tok("42"), tok("data")]) == {"data"}


def test_novel_terms_examples():
    wl = Wordlists(frozenset({"any"}), frozenset({"any"}))
    assert novel_terms({"network", "system", "any"}, {"system"}, wl) == {"network"}
    assert novel_terms({"a", "b"}, {"a", "b"}, wl) == frozenset()
    wl2 = Wordlists(frozenset({"zzz"}), frozenset({"zzz"}))
    assert novel_terms({"stability", "traffic"}, set(), wl2) == {"stability", "traffic"}


def test_default_wordlists(wordlists):
    assert len(wordlists.common_250) == 250
    assert {"any", "other", "each"} <= wordlists.combined
    assert "stability" not in wordlists.combined


def test_token_validation():
    with pytest.raises(ValueError):
        Token("word", "word", "PRON", 0)
    with pytest.raises(ValueError):
        Token("word", "word", "NOUN", -1)


def test_load_pipeline():
    assert load_pipeline("rules").name == "rules"
    with pytest.raises(ValueError):
        load_pipeline("nonsense")


def test_detokenize_round_trip(pipeline):
    doc = parse_document("The system shall log errors. Users may export data.", "d", pipeline)
    again = parse_document(doc.detokenize(), "d", pipeline)
    assert [t.lemma for t in again.tokens()] == [t.lemma for t in doc.tokens()]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["The", "system", "shall", "store", "data", ".", "users", "run", "quickly", ","]),
                min_size=1, max_size=30))
def test_parse_never_loses_tokens(pipeline, words):
    text = " ".join(words)
    doc = pipeline.parse(text, "d")
    assert [t.surface for t in doc.tokens()] == words
    assert isinstance(doc, AnnotatedDocument)
