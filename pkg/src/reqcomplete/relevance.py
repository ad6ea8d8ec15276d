"""Relevance filter: labeling, balancing, training, tuning and feature ranking.

The filter itself is a scikit-learn classifier (:class:`RelevanceFilter`)
so it can be cross-validated, tuned and pickled like any other estimator.
Three presets mirror the filtering levels used for recommendations:

========  =====================  ==========
preset    training data          algorithm
========  =====================  ==========
strict    full training set      RF
moderate  under-sampled (1:1)    RF
lenient   under-sampled + cost   SVM
========  =====================  ==========
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import joblib
import numpy as np
import pandas as pd
import sklearn
from scipy.stats import loguniform
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import ParameterSampler, StratifiedKFold
from sklearn.neural_network import MLPClassifier
from sklearn.pipeline import Pipeline
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier
from sklearn.ensemble import RandomForestClassifier
from sklearn.utils.validation import check_is_fitted

from .metrics import classification_metrics
from .exceptions import DegenerateDataset, SchemaMismatch, TooFewRows, UnsupportedAlgorithm
from .features import FEATURES, NON_RELEVANT, RELEVANT, SCHEMA_VERSION, FeatureEncoder, FeatureMatrix

ALGORITHMS = ("NN", "DT", "LR", "RF", "SVM")
MODEL_FORMAT = "reqcomplete-filter/1"

# Random-search spaces; none are published alongside the approach.
SEARCH_SPACES = {
    "NN": {
        "hidden_layer_sizes": [(8,), (16,), (32,), (64,)],
        "alpha": loguniform(1e-5, 1e-1),
        "learning_rate_init": loguniform(1e-4, 1e-2),
    },
    "DT": {
        "max_depth": [None, 3, 5, 8, 12, 20],
        "min_samples_leaf": [1, 2, 5, 10, 20],
        "criterion": ["gini", "entropy"],
    },
    "LR": {"C": loguniform(1e-3, 1e3)},
    "RF": {
        "n_estimators": [50, 100, 200],
        "max_depth": [None, 5, 10, 20],
        "min_samples_leaf": [1, 2, 5],
        "max_features": ["sqrt", 0.5, None],
    },
    "SVM": {
        "C": loguniform(1e-2, 1e2),
        "gamma": ["scale", 0.01, 0.1, 1.0],
        "kernel": ["rbf", "linear"],
    },
}


@dataclass(frozen=True)
class CostMatrix:
    cost_fn: float = 2.0
    cost_fp: float = 1.0

    def __post_init__(self):
        if self.cost_fn <= 0 or self.cost_fp <= 0:
            raise ValueError("costs must be positive")


LENIENT_COST = CostMatrix(2.0, 1.0)


@dataclass(frozen=True)
class Preset:
    name: str
    algorithm: str
    undersample: bool
    cost: CostMatrix | None


PRESETS = {
    "strict": Preset("strict", "RF", False, None),
    "moderate": Preset("moderate", "RF", True, None),
    "lenient": Preset("lenient", "SVM", True, LENIENT_COST),
}


# ---------------------------------------------------------------------------
# labeled data


@dataclass
class LabeledDataset:
    matrix: FeatureMatrix
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        if any(lab not in (RELEVANT, NON_RELEVANT) for lab in self.matrix.labels):
            raise ValueError("every row must be labeled relevant or non-relevant")

    def __len__(self):
        return len(self.matrix)

    @property
    def X(self) -> pd.DataFrame:
        return self.matrix.features()

    @property
    def y(self) -> np.ndarray:
        return np.array(self.matrix.labels, dtype=object)

    @property
    def class_counts(self) -> dict:
        counts = Counter(self.matrix.labels)
        return {RELEVANT: counts.get(RELEVANT, 0), NON_RELEVANT: counts.get(NON_RELEVANT, 0)}

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(self.matrix.subset(indices), list(self.provenance))

    @classmethod
    def concat(cls, datasets: Iterable["LabeledDataset"]) -> "LabeledDataset":
        datasets = list(datasets)
        provenance = [p for d in datasets for p in d.provenance]
        return cls(FeatureMatrix.concat(d.matrix for d in datasets), provenance)


def label_predictions(matrix: FeatureMatrix, reference_terms, matcher) -> LabeledDataset:
    """Label a row relevant iff its lemma matches some reference term."""
    reference = sorted(reference_terms)
    cache = {}
    labels = []
    for rec in matrix.records:
        if rec.lemma not in cache:
            cache[rec.lemma] = any(matcher(rec.lemma, t) for t in reference)
        labels.append(RELEVANT if cache[rec.lemma] else NON_RELEVANT)
    doc_ids = sorted({r.doc_id for r in matrix.rows})
    return LabeledDataset(matrix.with_labels(labels), doc_ids)


def undersample_indices(y, random_state=None) -> np.ndarray:
    """Indices of a 1:1 class-balanced subsample, in original order."""
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2 or counts.min() == 0:
        raise DegenerateDataset("under-sampling needs both classes present")
    rng = np.random.default_rng(random_state)
    n = counts.min()
    keep = []
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        keep.append(idx if len(idx) == n else rng.choice(idx, size=n, replace=False))
    return np.sort(np.concatenate(keep))


def undersample(ds: LabeledDataset, seed=None) -> LabeledDataset:
    counts = ds.class_counts
    if min(counts.values()) == 0:
        raise DegenerateDataset(f"cannot balance a dataset with class counts {counts}")
    return ds.subset(undersample_indices(ds.y, seed))


# ---------------------------------------------------------------------------
# estimator


def _base_estimator(algorithm: str, random_state):
    if algorithm == "NN":
        return MLPClassifier(hidden_layer_sizes=(16,), max_iter=500, random_state=random_state)
    if algorithm == "DT":
        return DecisionTreeClassifier(random_state=random_state)
    if algorithm == "LR":
        return LogisticRegression(max_iter=2000)
    if algorithm == "RF":
        return RandomForestClassifier(n_estimators=100, random_state=random_state, n_jobs=1)
    if algorithm == "SVM":
        return SVC(kernel="rbf", random_state=random_state)
    raise UnsupportedAlgorithm(f"{algorithm!r} is not one of {ALGORITHMS}")


def _as_features(X) -> pd.DataFrame:
    if isinstance(X, FeatureMatrix):
        return X.features()
    if isinstance(X, LabeledDataset):
        return X.X
    X = pd.DataFrame(X)
    missing = [c for c in FEATURES if c not in X.columns]
    if missing:
        raise SchemaMismatch(f"feature columns missing: {missing}")
    return X[list(FEATURES)]


class RelevanceFilter(ClassifierMixin, BaseEstimator):
    """Binary relevant / non-relevant classifier over F1-F13.

    Parameters
    ----------
    algorithm : {"NN", "DT", "LR", "RF", "SVM"}
    hyperparams : dict, optional
        Passed to the underlying scikit-learn estimator.
    cost_fn, cost_fp : float
        Misclassification costs; relevant rows are weighted by
        ``cost_fn / cost_fp`` during fitting (cost-sensitive learning by
        instance reweighting).
    undersample : bool
        Balance classes 1:1 by random under-sampling before fitting.
    random_state : int
    """

    def __init__(self, algorithm="RF", hyperparams=None, cost_fn=1.0, cost_fp=1.0, undersample=False,
                 random_state=0):
        self.algorithm = algorithm
        self.hyperparams = hyperparams
        self.cost_fn = cost_fn
        self.cost_fp = cost_fp
        self.undersample = undersample
        self.random_state = random_state

    def _make_pipeline(self):
        est = _base_estimator(self.algorithm, self.random_state)
        if self.hyperparams:
            est.set_params(**self.hyperparams)
        steps = [("encode", FeatureEncoder())]
        if self.algorithm in {"NN", "LR", "SVM"}:
            steps.append(("scale", StandardScaler()))
        steps.append(("clf", est))
        return Pipeline(steps)

    def fit(self, X, y=None):
        if isinstance(X, LabeledDataset) and y is None:
            y = X.y
        X = _as_features(X)
        y = np.asarray(y, dtype=object)
        if len(X) != len(y):
            raise ValueError("X and y have different lengths")
        if len(y) == 0:
            raise DegenerateDataset("cannot fit on an empty dataset")
        if self.undersample:
            idx = undersample_indices(y, self.random_state)
            X, y = X.iloc[idx], y[idx]
        self.classes_ = np.array([NON_RELEVANT, RELEVANT], dtype=object)
        present = np.unique(y)
        if len(present) == 1:
            self.constant_ = present[0]
            self.pipeline_ = None
            return self
        self.constant_ = None
        weights = np.where(y == RELEVANT, self.cost_fn / self.cost_fp, 1.0)
        self.pipeline_ = self._make_pipeline()
        target = (y == RELEVANT).astype(int)
        if np.all(weights == 1.0):
            self.pipeline_.fit(X, target)
        else:
            self.pipeline_.fit(X, target, clf__sample_weight=weights)
        return self

    def predict(self, X):
        check_is_fitted(self, "classes_")
        X = _as_features(X)
        if self.constant_ is not None:
            return np.full(len(X), self.constant_, dtype=object)
        if len(X) == 0:
            return np.empty(0, dtype=object)
        return self.classes_[self.pipeline_.predict(X)]


@dataclass
class FilterModel:
    """A trained filter plus the metadata needed to reuse it safely."""

    estimator: RelevanceFilter
    training_mode: str
    schema_version: str = SCHEMA_VERSION

    @property
    def algorithm(self) -> str:
        return self.estimator.algorithm

    @property
    def hyperparams(self) -> dict:
        return dict(self.estimator.hyperparams or {})

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        if matrix.schema_version != self.schema_version:
            raise SchemaMismatch(f"matrix schema {matrix.schema_version} != model schema {self.schema_version}")
        return self.estimator.predict(matrix)

    def save(self, path):
        joblib.dump({
            "format": MODEL_FORMAT,
            "algorithm": self.algorithm,
            "hyperparams": self.hyperparams,
            "training_mode": self.training_mode,
            "schema_version": self.schema_version,
            "cost": [self.estimator.cost_fn, self.estimator.cost_fp],
            "sklearn_version": sklearn.__version__,
            "payload": self.estimator,
        }, path)

    @classmethod
    def load(cls, path) -> "FilterModel":
        box = joblib.load(path)
        if not isinstance(box, dict) or box.get("format") != MODEL_FORMAT:
            raise SchemaMismatch(f"{path} is not a {MODEL_FORMAT} file")
        return cls(box["payload"], box["training_mode"], box["schema_version"])


def train(ds: LabeledDataset, algorithm: str, cost: CostMatrix | None = None, hyperparams=None,
          seed: int = 0, training_mode: str = "custom") -> FilterModel:
    if algorithm not in ALGORITHMS:
        raise UnsupportedAlgorithm(f"{algorithm!r} is not one of {ALGORITHMS}")
    cost = cost or CostMatrix(1.0, 1.0)
    est = RelevanceFilter(algorithm, hyperparams, cost.cost_fn, cost.cost_fp, random_state=seed)
    return FilterModel(est.fit(ds), training_mode, ds.matrix.schema_version)


def train_preset(ds: LabeledDataset, preset: str, hyperparams=None, seed: int = 0) -> FilterModel:
    p = PRESETS[preset]
    data = undersample(ds, seed) if p.undersample else ds
    return train(data, p.algorithm, p.cost, hyperparams, seed, training_mode=preset)


# ---------------------------------------------------------------------------
# evaluation and tuning


@dataclass(frozen=True)
class CVResult:
    accuracy: float
    precision: float | None
    recall: float | None
    folds: tuple = ()


def fold_indices(y, folds: int = 10, seed: int = 0) -> list:
    """Stratified (train, test) index pairs; test parts partition the rows."""
    y = np.asarray(y)
    if len(y) < folds:
        raise TooFewRows(f"{len(y)} rows cannot be split into {folds} folds")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    try:
        import warnings

        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="The least populated class")
            return list(splitter.split(np.zeros(len(y)), y))
    except ValueError as exc:
        raise TooFewRows(str(exc)) from exc


def _mean_defined(values) -> float | None:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def cross_validate(ds: LabeledDataset, algorithm: str, folds: int = 10, seed: int = 0,
                   cost: CostMatrix | None = None, hyperparams=None) -> CVResult:
    """Stratified k-fold estimate of classification accuracy, precision and recall.

    Per-fold metrics are averaged; undefined precision/recall values are left
    out of the average.
    """
    if algorithm not in ALGORITHMS:
        raise UnsupportedAlgorithm(f"{algorithm!r} is not one of {ALGORITHMS}")
    X, y = ds.X, ds.y
    cost = cost or CostMatrix(1.0, 1.0)
    proto = RelevanceFilter(algorithm, hyperparams, cost.cost_fn, cost.cost_fp, random_state=seed)
    per_fold = []
    for train_idx, test_idx in fold_indices(y, folds, seed):
        est = clone(proto).fit(X.iloc[train_idx], y[train_idx])
        pred = est.predict(X.iloc[test_idx]) == RELEVANT
        truth = y[test_idx] == RELEVANT
        tp = int(np.sum(pred & truth))
        fp = int(np.sum(pred & ~truth))
        tn = int(np.sum(~pred & ~truth))
        fn = int(np.sum(~pred & truth))
        per_fold.append(classification_metrics(tp, fp, tn, fn))
    return CVResult(
        accuracy=float(np.mean([m[0] for m in per_fold])),
        precision=_mean_defined(m[1] for m in per_fold),
        recall=_mean_defined(m[2] for m in per_fold),
        folds=tuple(per_fold),
    )


def random_search(ds: LabeledDataset, algorithm: str, space=None, budget: int = 10, seed: int = 0,
                  folds: int = 10, cost: CostMatrix | None = None) -> dict:
    """Sample ``budget`` configurations and keep the one with the best CV accuracy."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    space = SEARCH_SPACES[algorithm] if space is None else space
    best, best_acc = None, -math.inf
    for params in ParameterSampler(space, n_iter=budget, random_state=seed):
        acc = cross_validate(ds, algorithm, folds, seed, cost, params).accuracy
        if acc > best_acc:
            best, best_acc = params, acc
    return dict(best)


# ---------------------------------------------------------------------------
# information gain


def entropy(labels) -> float:
    labels = list(labels)
    n = len(labels)
    if n == 0:
        return 0.0
    return -sum((c / n) * math.log2(c / n) for c in Counter(labels).values())


def _conditional_entropy(groups, y) -> float:
    n = len(y)
    total = 0.0
    for value in np.unique(groups):
        part = y[groups == value]
        total += len(part) / n * entropy(part)
    return total


def mdl_cut_points(values, y) -> list:
    """Supervised discretization cut points (recursive entropy minimization, MDL stop rule)."""
    order = np.argsort(values, kind="mergesort")
    v, lab = np.asarray(values, float)[order], np.asarray(y)[order]
    cuts = []

    def split(lo, hi):
        s_v, s_y = v[lo:hi], lab[lo:hi]
        n = hi - lo
        if n < 2:
            return
        ent = entropy(s_y)
        best = None
        for i in range(1, n):
            if s_v[i] == s_v[i - 1]:
                continue
            e = (i * entropy(s_y[:i]) + (n - i) * entropy(s_y[i:])) / n
            if best is None or e < best[0]:
                best = (e, i)
        if best is None:
            return
        e, i = best
        gain = ent - e
        k = len(set(s_y))
        k1, k2 = len(set(s_y[:i])), len(set(s_y[i:]))
        delta = math.log2(3 ** k - 2) - (k * ent - k1 * entropy(s_y[:i]) - k2 * entropy(s_y[i:]))
        if gain <= (math.log2(n - 1) + delta) / n:
            return
        cuts.append((s_v[i - 1] + s_v[i]) / 2)
        split(lo, lo + i)
        split(lo + i, hi)

    split(0, len(v))
    return sorted(cuts)


def information_gain_table(X: pd.DataFrame, y, nominal: Sequence[str] = ()) -> list:
    """IG of each column, ``H(y) - H(y | column)``, sorted in descending order.

    Numeric columns are binned with :func:`mdl_cut_points`; missing values
    form a bin of their own.
    """
    y = np.asarray(y, dtype=object)
    base = entropy(y)
    out = []
    for col in X.columns:
        series = X[col]
        missing = series.isna().to_numpy()
        if col in nominal or series.dtype == object or series.dtype == bool:
            groups = np.where(missing, "<missing>", series.astype(str).to_numpy())
        else:
            values = series.to_numpy(float)
            cuts = mdl_cut_points(values[~missing], y[~missing]) if (~missing).sum() else []
            groups = np.where(missing, -1, np.searchsorted(cuts, np.nan_to_num(values), side="right"))
        out.append((col, max(0.0, base - _conditional_entropy(groups, y))))
    return sorted(out, key=lambda item: (-item[1], list(X.columns).index(item[0])))


def information_gain(ds: LabeledDataset) -> list:
    return information_gain_table(ds.X, ds.y, nominal=("f1", "f2", "f3"))


# ---------------------------------------------------------------------------
# applying a filter


def apply_filter(model: FilterModel, matrix: FeatureMatrix) -> frozenset:
    """Deduplicated lemmas of the rows the model classifies as relevant."""
    if not len(matrix):
        if matrix.schema_version != model.schema_version:
            raise SchemaMismatch(f"matrix schema {matrix.schema_version} != model schema {model.schema_version}")
        return frozenset()
    keep = model.predict(matrix) == RELEVANT
    return frozenset(rec.lemma for rec, k in zip(matrix.records, keep) if k)
