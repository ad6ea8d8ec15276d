"""Recommend domain terms that may be missing from a requirements document.

A masked language model predicts alternatives for every noun and verb of
the document; predictions are lemmatized, stripped of terms the document
already uses and of common words, and optionally passed through a learned
relevance filter.
"""
from .evaluation import DocumentSplit, EvaluationReport, run_expi, run_expii, run_expiii, split_document
from .features import FeatureEncoder, FeatureMatrix, FeatureVector, build_matrix
from .metrics import accuracy_metric, classification_metrics, coverage_metric
from .mlm import StubBackend, load_backend
from .predictions import basic_filter, collect_predictions, enumerate_masks
from .relevance import FilterModel, LabeledDataset, RelevanceFilter, apply_filter, train, train_preset
from .similarity import EmbeddingStore, Matcher, cosine, levenshtein
from .stats import vargha_delaney_a12, wilcoxon_rank_sum
from .text_pipeline import AnnotatedDocument, Token, Wordlists, load_pipeline, parse_document

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument", "DocumentSplit", "EmbeddingStore", "EvaluationReport", "FeatureEncoder",
    "FeatureMatrix", "FeatureVector", "FilterModel", "LabeledDataset", "Matcher", "RelevanceFilter",
    "StubBackend", "Token", "Wordlists", "accuracy_metric", "apply_filter", "basic_filter", "build_matrix",
    "classification_metrics", "collect_predictions", "cosine", "coverage_metric", "enumerate_masks",
    "levenshtein", "load_backend", "load_pipeline", "parse_document", "run_expi", "run_expii", "run_expiii",
    "split_document", "train", "train_preset", "vargha_delaney_a12", "wilcoxon_rank_sum",
]
