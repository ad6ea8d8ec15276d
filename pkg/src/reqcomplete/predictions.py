"""Mask nouns and verbs, collect MLM predictions and drop obvious noise."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from .exceptions import PredictionError, ReqCompleteError
from .mlm import MaskedQuery
from .text_pipeline import MASKABLE_POS, AnnotatedDocument, Token, Wordlists, default_pipeline


@dataclass(frozen=True)
class MaskInstance:
    sentence_index: int
    token_index: int
    masked_word: Token

    def __post_init__(self):
        if self.masked_word.pos not in MASKABLE_POS:
            raise ValueError(f"cannot mask a {self.masked_word.pos} token")


@dataclass(frozen=True)
class PredictionRecord:
    instance: MaskInstance
    term: str
    lemma: str
    confidence: float


def enumerate_masks(doc: AnnotatedDocument) -> list:
    """One instance per noun/verb occurrence, in document order."""
    return [
        MaskInstance(si, ti, tok)
        for si, sent in enumerate(doc.sentences)
        for ti, tok in enumerate(sent)
        if tok.pos in MASKABLE_POS
    ]


def substitute(doc: AnnotatedDocument, instance: MaskInstance, word: str) -> list:
    words = [t.surface for t in doc.sentences[instance.sentence_index]]
    words[instance.token_index] = word
    return words


def _predict_one(doc, instance, backend, k, pipeline) -> list:
    words = [t.surface for t in doc.sentences[instance.sentence_index]]
    try:
        scored = backend.predict(MaskedQuery(words, instance.token_index, k))
    except ReqCompleteError as exc:
        raise PredictionError(instance, exc) from exc
    records = []
    for pred in scored:
        in_context = pipeline.annotate_words(substitute(doc, instance, pred.term))
        lemma = in_context[instance.token_index].lemma.lower() or pred.term.lower()
        records.append(PredictionRecord(instance, pred.term, lemma, pred.confidence))
    return records


def collect_predictions(doc: AnnotatedDocument, backend, k: int, pipeline=None, workers: int = 1) -> list:
    """Query the backend once per mask instance and return the flat bag.

    Records are lemmatized in their sentence context with the same pipeline
    used for documents.  Order is document order whatever ``workers`` is.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pipeline = pipeline or default_pipeline()
    instances = enumerate_masks(doc)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda inst: _predict_one(doc, inst, backend, k, pipeline), instances))
    else:
        chunks = [_predict_one(doc, inst, backend, k, pipeline) for inst in instances]
    return [rec for chunk in chunks for rec in chunk]


def basic_filter(bag: Iterable[PredictionRecord], disclosed, wordlists: Wordlists) -> list:
    """Drop predictions whose lemma is already disclosed or is a common/vague word."""
    blocked = frozenset(disclosed) | wordlists.combined
    return [rec for rec in bag if rec.lemma not in blocked]


def recommended_terms(bag: Iterable[PredictionRecord]) -> frozenset:
    return frozenset(rec.lemma for rec in bag)
