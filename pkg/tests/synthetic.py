"""Seeded synthetic feature matrices for learning tests."""
import numpy as np

from reqcomplete.features import NON_RELEVANT, RELEVANT, FeatureMatrix, FeatureRow, FeatureVector
from reqcomplete.predictions import MaskInstance, PredictionRecord
from reqcomplete.relevance import LabeledDataset
from reqcomplete.text_pipeline import Token

_MASKED = MaskInstance(0, 0, Token("system", "system", "NOUN", 0))


def make_row(i, signal, label, rng, f8=None, f13=None):
    f4, f5 = int(rng.integers(3, 12)), int(rng.integers(3, 12))
    f13 = float(rng.uniform(0, 1)) if f13 is None else f13
    vec = FeatureVector(
        f1="NOUN", f2="NOUN", f3=True, f4=f4, f5=f5, f6=min(f4, f5) / max(f4, f5),
        f7=float(np.clip(signal, 1e-6, 1.0)), f8=int(rng.integers(0, 10)) if f8 is None else f8, f9=None,
        f10=int(rng.integers(0, 10)), f11=int(rng.integers(0, 10)), f12=f13 * float(rng.uniform(0, 1)), f13=f13,
    )
    rec = PredictionRecord(_MASKED, f"term{i}", f"term{i}", vec.f7)
    return FeatureRow(rec, vec, label, "synthetic")


def separable(n=200, seed=0) -> LabeledDataset:
    """Classes split with a wide margin on f7, f8 and f13; the other features are noise."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        positive = i % 2 == 0
        lo = 0.7 if positive else 0.0
        rows.append(make_row(i, rng.uniform(lo, lo + 0.3), RELEVANT if positive else NON_RELEVANT, rng,
                             f8=int(rng.integers(0, 3)) if positive else int(rng.integers(7, 10)),
                             f13=float(rng.uniform(lo, lo + 0.3))))
    return LabeledDataset(FeatureMatrix(rows), ["synthetic"])


def imbalanced(n=600, positive_rate=0.05, seed=0, shift=0.25) -> LabeledDataset:
    """Overlapping classes: the positive signal is shifted upwards by ``shift``."""
    rng = np.random.default_rng(seed)
    n_pos = max(2, int(round(n * positive_rate)))
    rows = []
    for i in range(n):
        positive = i < n_pos
        signal = rng.normal(0.4 + (shift if positive else 0.0), 0.15)
        rows.append(make_row(i, signal, RELEVANT if positive else NON_RELEVANT, rng))
    order = rng.permutation(n)
    return LabeledDataset(FeatureMatrix([rows[j] for j in order]), ["synthetic"])


def random_labels(n=200, seed=0) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    labels = np.array([RELEVANT] * (n // 2) + [NON_RELEVANT] * (n - n // 2))
    rng.shuffle(labels)
    rows = [make_row(i, rng.uniform(0, 1), labels[i], rng) for i in range(n)]
    return LabeledDataset(FeatureMatrix(rows), ["synthetic"])
