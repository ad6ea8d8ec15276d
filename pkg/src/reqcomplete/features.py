"""Per-prediction feature vectors (F1-F13) and the persisted feature matrix."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import CorpusStats, frequency_deciles
from .predictions import MaskInstance, PredictionRecord, substitute
from .similarity import EmbeddingStore, cosine, levenshtein
from .text_pipeline import POS_TAGS, AnnotatedDocument, Token, default_pipeline

SCHEMA_VERSION = "reqcomplete-features/1"
FEATURES = tuple(f"f{i}" for i in range(1, 14))
NOMINAL = ("f1", "f2")
RELEVANT, NON_RELEVANT = "relevant", "non-relevant"
META_COLUMNS = (
    "doc_id", "sentence_index", "token_index", "masked_surface", "masked_lemma", "masked_pos",
    "masked_offset", "term", "lemma", "confidence",
)


@dataclass(frozen=True)
class FeatureVector:
    f1: str
    f2: str
    f3: bool
    f4: int
    f5: int
    f6: float
    f7: float
    f8: int
    f9: float | None
    f10: int
    f11: int
    f12: float
    f13: float

    def __post_init__(self):
        if self.f1 not in POS_TAGS or self.f2 not in POS_TAGS:
            raise ValueError("f1/f2 must be POS tags")
        if self.f3 != (self.f1 == self.f2):
            raise ValueError("f3 must equal (f1 == f2)")
        if not 0.0 < self.f6 <= 1.0:
            raise ValueError("f6 must lie in (0, 1]")
        if not (0 <= self.f10 <= 9 and 0 <= self.f11 <= 9):
            raise ValueError("deciles must lie in 0..9")
        if self.f12 > self.f13:
            raise ValueError("f12 (mean TF-IDF) cannot exceed f13 (max TF-IDF)")


@dataclass(frozen=True)
class FeatureRow:
    record: PredictionRecord
    vector: FeatureVector
    label: str | None = None
    doc_id: str = ""


def pos_in_context(record: PredictionRecord, doc: AnnotatedDocument, pipeline=None) -> str:
    """POS of the prediction after substituting it for the masked word."""
    pipeline = pipeline or default_pipeline()
    words = substitute(doc, record.instance, record.term)
    return pipeline.annotate_words(words)[record.instance.token_index].pos


def prediction_deciles(all_preds: Iterable[PredictionRecord]) -> dict:
    return frequency_deciles(Counter(r.lemma for r in all_preds))


def _semantic_similarity(store, prediction: PredictionRecord) -> float | None:
    masked = prediction.instance.masked_word
    sim = cosine(store, prediction.term, masked.surface)
    if sim is None:
        sim = cosine(store, prediction.lemma, masked.lemma)
    return sim


def compute_vector(record: PredictionRecord, doc: AnnotatedDocument, pred_deciles: dict,
                   stats: CorpusStats, store: EmbeddingStore, pipeline=None) -> FeatureVector:
    masked = record.instance.masked_word
    if record.lemma == masked.lemma.lower():
        raise ValueError(f"prediction {record.term!r} repeats the masked word; run basic_filter first")
    f1 = masked.pos
    f2 = pos_in_context(record, doc, pipeline)
    f4, f5 = len(masked.surface), len(record.term)
    f13 = stats.tfidf_max(record.lemma)
    return FeatureVector(
        f1=f1,
        f2=f2,
        f3=f1 == f2,
        f4=f4,
        f5=f5,
        f6=min(f4, f5) / max(f4, f5),
        f7=float(record.confidence),
        f8=levenshtein(record.term.lower(), masked.surface.lower()),
        f9=_semantic_similarity(store, record),
        f10=pred_deciles.get(record.lemma, 9),
        f11=stats.decile(record.lemma),
        f12=min(stats.tfidf_mean(record.lemma), f13),  # guards float round-off when all values tie
        f13=f13,
    )


@dataclass
class FeatureMatrix:
    rows: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def __len__(self):
        return len(self.rows)

    @property
    def labels(self) -> list:
        return [r.label for r in self.rows]

    @property
    def records(self) -> list:
        return [r.record for r in self.rows]

    def with_labels(self, labels: Sequence[str]) -> "FeatureMatrix":
        if len(labels) != len(self.rows):
            raise ValueError("one label per row required")
        return FeatureMatrix([FeatureRow(r.record, r.vector, lab, r.doc_id) for r, lab in zip(self.rows, labels)],
                             self.schema_version)

    def subset(self, indices) -> "FeatureMatrix":
        return FeatureMatrix([self.rows[i] for i in indices], self.schema_version)

    @classmethod
    def concat(cls, matrices: Iterable["FeatureMatrix"]) -> "FeatureMatrix":
        rows = []
        for m in matrices:
            if m.schema_version != SCHEMA_VERSION:
                raise ValueError(f"cannot concatenate schema {m.schema_version}")
            rows.extend(m.rows)
        return cls(rows)

    def features(self) -> pd.DataFrame:
        """The F1-F13 columns only, one row per prediction."""
        data = [asdict(r.vector) for r in self.rows]
        return pd.DataFrame(data, columns=list(FEATURES))

    # -- persistence ------------------------------------------------------
    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# schema={self.schema_version}\n")
            writer = csv.writer(fh)
            writer.writerow([*META_COLUMNS, *FEATURES, "label"])
            for row in self.rows:
                rec, vec = row.record, row.vector
                tok = rec.instance.masked_word
                meta = [row.doc_id, rec.instance.sentence_index, rec.instance.token_index, tok.surface, tok.lemma,
                        tok.pos, tok.char_offset, rec.term, rec.lemma, repr(float(rec.confidence))]
                values = []
                for name in FEATURES:
                    v = getattr(vec, name)
                    if v is None:
                        values.append("")
                    elif isinstance(v, bool):
                        values.append("true" if v else "false")
                    elif isinstance(v, float):
                        values.append(repr(v))
                    else:
                        values.append(v)
                writer.writerow([*meta, *values, row.label or ""])

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            first = fh.readline()
            schema = first.strip().partition("schema=")[2] if first.startswith("#") else SCHEMA_VERSION
            if not first.startswith("#"):
                fh.seek(0)
            reader = csv.DictReader(fh)
            rows = []
            for rec in reader:
                tok = Token(rec["masked_surface"], rec["masked_lemma"], rec["masked_pos"], int(rec["masked_offset"]))
                inst = MaskInstance(int(rec["sentence_index"]), int(rec["token_index"]), tok)
                pred = PredictionRecord(inst, rec["term"], rec["lemma"], float(rec["confidence"]))
                vec = FeatureVector(
                    f1=rec["f1"], f2=rec["f2"], f3=rec["f3"] == "true", f4=int(rec["f4"]), f5=int(rec["f5"]),
                    f6=float(rec["f6"]), f7=float(rec["f7"]), f8=int(rec["f8"]),
                    f9=None if rec["f9"] == "" else float(rec["f9"]), f10=int(rec["f10"]), f11=int(rec["f11"]),
                    f12=float(rec["f12"]), f13=float(rec["f13"]),
                )
                rows.append(FeatureRow(pred, vec, rec["label"] or None, rec["doc_id"]))
        return cls(rows, schema)


def build_matrix(preds: Sequence[PredictionRecord], doc: AnnotatedDocument, stats: CorpusStats,
                 store: EmbeddingStore, all_preds: Sequence[PredictionRecord] | None = None,
                 pipeline=None) -> FeatureMatrix:
    """One feature row per Step-3 prediction.

    ``all_preds`` is the unfiltered prediction bag used for the F10
    frequency deciles; it defaults to ``preds``.
    """
    deciles = prediction_deciles(all_preds if all_preds is not None else preds)
    rows = [
        FeatureRow(rec, compute_vector(rec, doc, deciles, stats, store, pipeline), None, doc.doc_id)
        for rec in preds
    ]
    return FeatureMatrix(rows)


class FeatureEncoder(TransformerMixin, BaseEstimator):
    """Turn F1-F13 into a fixed numeric design matrix.

    F1/F2 are one-hot encoded over the closed POS tag set, F3 becomes 0/1 and
    an undefined F9 becomes 0 plus a separate missing-indicator column. The
    encoding has no learned state, so matrices from different documents share
    one column layout.
    """

    def fit(self, X, y=None):
        self.n_features_in_ = len(FEATURES)
        return self

    def get_feature_names_out(self, input_features=None):
        names = [f"f1={p}" for p in POS_TAGS] + [f"f2={p}" for p in POS_TAGS]
        return np.array(names + ["f3", "f4", "f5", "f6", "f7", "f8", "f9", "f9_missing", "f10", "f11", "f12", "f13"])

    def transform(self, X):
        if isinstance(X, FeatureMatrix):
            X = X.features()
        X = pd.DataFrame(X, columns=list(FEATURES))
        if not len(X):
            return np.empty((0, len(self.get_feature_names_out())))
        f9 = pd.to_numeric(X["f9"], errors="coerce")
        columns = [(X["f1"] == p).to_numpy(float) for p in POS_TAGS]
        columns += [(X["f2"] == p).to_numpy(float) for p in POS_TAGS]
        columns.append(X["f3"].astype(bool).to_numpy(float))
        columns += [X[c].to_numpy(float) for c in ("f4", "f5", "f6", "f7", "f8")]
        columns += [f9.fillna(0.0).to_numpy(float), f9.isna().to_numpy(float)]
        columns += [X[c].to_numpy(float) for c in ("f10", "f11", "f12", "f13")]
        return np.column_stack(columns)
