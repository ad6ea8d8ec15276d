"""Withholding simulation and the three experiment runners.

A document is split at random into a disclosed and a withheld half.  Only
the disclosed half is run through masking, prediction, filtering and
feature extraction; the withheld half only supplies the novel terms the
predictions are scored against.

Seeds for individual runs come from :func:`derive_seed`, which hashes the
master seed together with the run key (experiment name, document id, k or
repeat index), so every run is reproducible on its own and independent of
execution order.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import CorpusStats, build_corpus, compute_stats, extract_keyphrases
from .exceptions import NoArticlesFound, TooSmall
from .features import RELEVANT, FeatureMatrix, build_matrix
from .metrics import accuracy_metric, classification_metrics, coverage_metric
from .predictions import basic_filter, collect_predictions, recommended_terms
from .relevance import (
    ALGORITHMS,
    LENIENT_COST,
    CostMatrix,
    FilterModel,
    LabeledDataset,
    cross_validate,
    information_gain,
    label_predictions,
    random_search,
    undersample,
)
from .similarity import Matcher, exact_matcher
from .stats import vargha_delaney_a12, wilcoxon_rank_sum
from .text_pipeline import AnnotatedDocument, Wordlists, default_pipeline, novel_terms, term_set

logger = logging.getLogger(__name__)

EXPI_KS = (5, 10, 15, 20)
FILTER_OPTIONS = {
    # option name -> (under-sample?, cost matrix)
    "strict": (False, None),
    "moderate": (True, None),
    "lenient": (True, LENIENT_COST),
}


def derive_seed(master: int, *key) -> int:
    text = "|".join(str(part) for part in (master, *key))
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little") >> 1


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class DocumentSplit:
    disclosed: AnnotatedDocument
    withheld: AnnotatedDocument
    seed: int
    ratio: float
    disclosed_indices: tuple = ()


def split_document(doc: AnnotatedDocument, ratio: float = 0.5, seed: int = 0) -> DocumentSplit:
    """Random sentence partition; the disclosed half gets the extra sentence."""
    n = len(doc.sentences)
    if n < 2:
        raise TooSmall(f"{doc.doc_id}: need at least 2 sentences to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_disclosed = min(n - 1, max(1, math.ceil(n * ratio - 1e-9)))
    return DocumentSplit(
        disclosed=doc.subset(perm[:n_disclosed].tolist(), f"{doc.doc_id}#disclosed"),
        withheld=doc.subset(perm[n_disclosed:].tolist(), f"{doc.doc_id}#withheld"),
        seed=seed,
        ratio=ratio,
        disclosed_indices=tuple(sorted(perm[:n_disclosed].tolist())),
    )


# ---------------------------------------------------------------------------
# shared run machinery


def wikipedia_corpus_provider(fetcher, cache=None, max_phrases: int = 50, wordlists=None, pipeline=None,
                              tfidf_mode: str = "score") -> Callable:
    """Step-4 provider: key phrases of the given document -> corpus statistics."""

    def provide(doc: AnnotatedDocument) -> CorpusStats:
        phrases = extract_keyphrases(doc, wordlists, limit=max_phrases)
        try:
            corpus = build_corpus(phrases, fetcher, cache, source_doc_id=doc.doc_id)
        except NoArticlesFound:
            logger.warning("%s: no domain articles found; corpus features fall back to unseen", doc.doc_id)
            return CorpusStats.empty(tfidf_mode)
        return compute_stats(corpus, pipeline, tfidf_mode)

    return provide


@dataclass
class Resources:
    """Everything a run needs besides the document itself."""

    backend: object
    wordlists: Wordlists = field(default_factory=Wordlists.default)
    matcher: Matcher = field(default_factory=exact_matcher)
    pipeline: object = None
    corpus_provider: Callable | None = None
    workers: int = 1

    def __post_init__(self):
        if self.pipeline is None:
            self.pipeline = default_pipeline()

    def corpus_stats(self, doc: AnnotatedDocument) -> CorpusStats:
        if self.corpus_provider is None:
            return CorpusStats.empty()
        return self.corpus_provider(doc)


@dataclass
class DisclosedAnalysis:
    doc: AnnotatedDocument
    raw: list
    filtered: list
    matrix: FeatureMatrix | None = None

    @property
    def recommended(self) -> frozenset:
        return recommended_terms(self.filtered)


def analyze_disclosed(doc: AnnotatedDocument, k: int, res: Resources, with_features: bool = False) -> DisclosedAnalysis:
    """Steps 1-3 (and 4-5 when ``with_features``) on one document.

    The argument is the only text this function sees, which is what keeps
    withheld content out of the predictions and features.
    """
    raw = collect_predictions(doc, res.backend, k, res.pipeline, res.workers)
    filtered = basic_filter(raw, term_set(doc), res.wordlists)
    matrix = None
    if with_features:
        stats = res.corpus_stats(doc)
        matrix = build_matrix(filtered, doc, stats, res.matcher.store, all_preds=raw, pipeline=res.pipeline)
    return DisclosedAnalysis(doc, raw, filtered, matrix)


@dataclass
class EvaluationReport:
    doc_id: str
    k: int
    filter_mode: str
    run_seed: int
    repeat: int
    accuracy: float | None
    coverage: float | None
    n_recommended: int
    n_novel: int
    classification_accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None

    def __post_init__(self):
        for name in ("accuracy", "coverage"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")

    def as_dict(self) -> dict:
        return asdict(self)


def _filter_counts(matrix: FeatureMatrix, predicted_relevant, novel, matcher) -> tuple:
    tp = fp = tn = fn = 0
    cache = {}
    for rec, pred in zip(matrix.records, predicted_relevant):
        if rec.lemma not in cache:
            cache[rec.lemma] = any(matcher(rec.lemma, n) for n in novel)
        truth = cache[rec.lemma]
        if pred and truth:
            tp += 1
        elif pred:
            fp += 1
        elif truth:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


# ---------------------------------------------------------------------------
# EXPI: predictions per mask


def run_expi(docs: Sequence[AnnotatedDocument], res: Resources, ks: Iterable[int] = EXPI_KS,
             master_seed: int = 0, ratio: float = 0.5) -> list:
    """Unfiltered Accuracy/Coverage for each (document, k), each with a fresh split."""
    reports = []
    for doc in docs:
        for k in ks:
            seed = derive_seed(master_seed, "expi", doc.doc_id, k)
            split = split_document(doc, ratio, seed)
            analysis = analyze_disclosed(split.disclosed, k, res)
            novel = novel_terms(term_set(split.withheld), term_set(split.disclosed), res.wordlists)
            d = analysis.recommended
            reports.append(EvaluationReport(
                doc.doc_id, k, "none", seed, 0,
                accuracy_metric(d, novel, res.matcher), coverage_metric(d, novel, res.matcher), len(d), len(novel),
            ))
    return sorted(reports, key=lambda r: (r.doc_id, r.k))


def pairwise_k_tests(reports: Sequence[EvaluationReport], metrics=("accuracy", "coverage")) -> list:
    """Wilcoxon rank-sum p-values and A12 for every pair of k levels."""
    ks = sorted({r.k for r in reports})
    rows = []
    for metric in metrics:
        for a, b in combinations(ks, 2):
            xs = [getattr(r, metric) for r in reports if r.k == a and getattr(r, metric) is not None]
            ys = [getattr(r, metric) for r in reports if r.k == b and getattr(r, metric) is not None]
            if not xs or not ys:
                continue
            rows.append({
                "metric": metric, "comparison": f"{a} vs {b}", "n": min(len(xs), len(ys)),
                "p_value": wilcoxon_rank_sum(xs, ys), "a12": vargha_delaney_a12(xs, ys),
            })
    return rows


def summarize(reports: Sequence[EvaluationReport], by=("k",)) -> list:
    """Mean of each metric per group; undefined values are skipped and counted."""
    groups = {}
    for r in sorted(reports, key=lambda r: (r.doc_id, r.k, r.filter_mode, r.repeat)):
        groups.setdefault(tuple(getattr(r, b) for b in by), []).append(r)
    out = []
    for key, members in sorted(groups.items()):
        row = dict(zip(by, key))
        row["runs"] = len(members)
        for metric in ("accuracy", "coverage", "classification_accuracy", "precision", "recall"):
            values = [getattr(m, metric) for m in members if getattr(m, metric) is not None]
            row[f"mean_{metric}"] = float(np.mean(values)) if values else None
            row[f"undefined_{metric}"] = len(members) - len(values)
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# EXPII: building the training set and comparing algorithms


@dataclass
class ExpIIResult:
    dataset: LabeledDataset
    table: list
    information_gain: list
    label_counts: dict


def build_training_set(docs: Sequence[AnnotatedDocument], res: Resources, k: int = 15, master_seed: int = 0,
                       ratio: float = 0.5) -> LabeledDataset:
    """Labeled feature rows from the disclosed halves of ``docs``.

    Halves are the ones EXPI uses for the same k.  A prediction is relevant
    when it matches a novel term of its withheld half.
    """
    parts = []
    for doc in docs:
        seed = derive_seed(master_seed, "expi", doc.doc_id, k)
        split = split_document(doc, ratio, seed)
        analysis = analyze_disclosed(split.disclosed, k, res, with_features=True)
        novel = novel_terms(term_set(split.withheld), term_set(split.disclosed), res.wordlists)
        ds = label_predictions(analysis.matrix, novel, res.matcher)
        ds.provenance = [doc.doc_id]
        parts.append(ds)
    return LabeledDataset.concat(parts)


def compare_algorithms(ds: LabeledDataset, algorithms=ALGORITHMS, folds: int = 10, budget: int = 0,
                       seed: int = 0) -> tuple:
    """CV table for every (option, algorithm) plus IG averaged over options."""
    table, gains = [], {}
    for option, (balance, cost) in FILTER_OPTIONS.items():
        data = undersample(ds, seed) if balance else ds
        for algorithm in algorithms:
            params = random_search(data, algorithm, budget=budget, seed=seed, folds=folds, cost=cost) if budget else None
            cv = cross_validate(data, algorithm, folds, seed, cost, params)
            table.append({
                "option": option, "algorithm": algorithm, "rows": len(data),
                "classification_accuracy": cv.accuracy, "precision": cv.precision, "recall": cv.recall,
                "hyperparams": params or {},
            })
        for feature, value in information_gain(data):
            gains.setdefault(feature, []).append(value)
    ig = sorted(((f, float(np.mean(v))) for f, v in gains.items()), key=lambda fv: (-fv[1], int(fv[0][1:])))
    return table, ig


def run_expii(docs: Sequence[AnnotatedDocument], res: Resources, k: int = 15, master_seed: int = 0,
              folds: int = 10, budget: int = 0, algorithms=ALGORITHMS) -> ExpIIResult:
    ds = build_training_set(docs, res, k, master_seed)
    table, ig = compare_algorithms(ds, algorithms, folds, budget, master_seed)
    return ExpIIResult(ds, table, ig, ds.class_counts)


# ---------------------------------------------------------------------------
# EXPIII: filtered recommendations on unseen documents


def run_expiii(docs: Sequence[AnnotatedDocument], res: Resources, models: dict, repeats: int = 5, k: int = 15,
               master_seed: int = 0, ratio: float = 0.5) -> list:
    """One unfiltered baseline plus one report per filter model, per document and repeat."""
    reports = []
    for doc in docs:
        for repeat in range(repeats):
            seed = derive_seed(master_seed, "expiii", doc.doc_id, repeat)
            split = split_document(doc, ratio, seed)
            analysis = analyze_disclosed(split.disclosed, k, res, with_features=bool(models))
            novel = novel_terms(term_set(split.withheld), term_set(split.disclosed), res.wordlists)
            d = analysis.recommended
            reports.append(EvaluationReport(
                doc.doc_id, k, "none", seed, repeat,
                accuracy_metric(d, novel, res.matcher), coverage_metric(d, novel, res.matcher), len(d), len(novel),
            ))
            for name in sorted(models):
                model: FilterModel = models[name]
                matrix = analysis.matrix
                keep = model.predict(matrix) == RELEVANT if len(matrix) else np.zeros(0, bool)
                kept = frozenset(rec.lemma for rec, flag in zip(matrix.records, keep) if flag)
                cls = (None, None, None)
                if len(matrix):
                    cls = classification_metrics(*_filter_counts(matrix, keep, novel, res.matcher))
                reports.append(EvaluationReport(
                    doc.doc_id, k, name, seed, repeat,
                    accuracy_metric(kept, novel, res.matcher), coverage_metric(kept, novel, res.matcher),
                    len(kept), len(novel), *cls,
                ))
    return sorted(reports, key=lambda r: (r.doc_id, r.repeat, r.filter_mode))


# ---------------------------------------------------------------------------
# plots


def box_plots(reports: Sequence[EvaluationReport], out_dir, group_by: str = "k",
              metrics=("accuracy", "coverage")) -> list:
    """One box-plot PNG per metric, grouped by ``group_by``; returns the paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = sorted({getattr(r, group_by) for r in reports}, key=str)
    paths = []
    for metric in metrics:
        data = [[getattr(r, metric) for r in reports if getattr(r, group_by) == g and getattr(r, metric) is not None]
                for g in groups]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.boxplot(data, showmeans=True)
        ax.set_xticks(range(1, len(groups) + 1), [str(g) for g in groups])
        ax.set_xlabel(group_by)
        ax.set_ylabel(metric)
        ax.set_ylim(-0.02, 1.02)
        fig.tight_layout()
        path = out_dir / f"{metric}_by_{group_by}.png"
        fig.savefig(path, dpi=100, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths
