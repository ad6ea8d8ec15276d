import random
from itertools import combinations

import numpy as np
import pytest
from scipy.stats import mannwhitneyu

from reqcomplete.metrics import accuracy_metric, classification_metrics, coverage_metric
from reqcomplete.similarity import EmbeddingStore, Matcher, exact_matcher
from reqcomplete.stats import effect_magnitude, vargha_delaney_a12, wilcoxon_rank_sum


def test_accuracy_examples():
    m = exact_matcher()
    assert accuracy_metric({"network", "foo"}, {"network"}, m) == 0.5
    assert accuracy_metric({"a", "b"}, {"a", "b"}, m) == 1.0
    assert accuracy_metric({"a"}, set(), m) == 0.0
    assert accuracy_metric(set(), {"a"}, m) is None


def test_coverage_examples():
    store = EmbeddingStore({"network": [1, 0], "net": [0.99, 0.05], "security": [0, 1]})
    m = Matcher(store, 0.85)
    assert coverage_metric({"network", "net"}, {"network", "security"}, m) == 0.5
    assert coverage_metric({"network", "security", "x"}, {"network", "security"}, m) == 1.0
    assert coverage_metric({"zzz"}, {"network"}, m) == 0.0
    assert coverage_metric({"a"}, set(), m) is None


def test_coverage_counts_each_novel_term_once():
    store = EmbeddingStore({"net": [1, 0], "network": [1, 0.01], "web": [1, 0.02]})
    m = Matcher(store, 0.85)
    assert coverage_metric({"network", "web"}, {"net"}, m) == 1.0


def test_classification_metrics_examples():
    assert classification_metrics(1, 1, 1, 1) == (0.5, 0.5, 0.5)
    assert classification_metrics(3, 0, 4, 0) == (1.0, 1.0, 1.0)
    acc, prec, rec = classification_metrics(0, 0, 3, 2)
    assert prec is None and rec == 0.0 and acc == 0.6
    with pytest.raises(ValueError):
        classification_metrics(0, 0, 0, 0)
    with pytest.raises(ValueError):
        classification_metrics(-1, 0, 1, 0)


def test_wilcoxon_examples():
    assert wilcoxon_rank_sum([1, 2, 3], [1, 2, 3]) == 1.0
    assert wilcoxon_rank_sum([1, 2], [3, 4]) == pytest.approx(2 / 6, abs=1e-4)


def test_wilcoxon_large_shift_detected():
    for seed in range(5):
        rng = np.random.default_rng(seed)
        assert wilcoxon_rank_sum(rng.normal(0, 1, 40), rng.normal(2, 1, 40)) < 0.01


def test_wilcoxon_normal_mode_agrees_with_scipy():
    rng = np.random.default_rng(1)
    x, y = rng.normal(0, 1, 30), rng.normal(0.4, 1, 25)
    expected = mannwhitneyu(x, y, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
    assert wilcoxon_rank_sum(x, y) == pytest.approx(expected, rel=1e-9)


def test_wilcoxon_exact_agrees_with_scipy_without_ties():
    x, y = [1.1, 2.5, 3.7, 9.0], [4.2, 5.5, 6.1, 7.3, 8.8]
    assert wilcoxon_rank_sum(x, y) == pytest.approx(mannwhitneyu(x, y, method="exact").pvalue, abs=1e-12)


def test_a12_examples():
    assert vargha_delaney_a12([3, 3, 3], [3, 3]) == 0.5
    assert vargha_delaney_a12([1, 2], [5, 6]) == 0.0
    # pair enumeration: 1 win, 2 ties out of 9 pairs
    assert vargha_delaney_a12([1, 2, 3], [2, 3, 4]) == pytest.approx(1 / 9 + 0.5 * 2 / 9)


def test_a12_brute_force():
    rnd = random.Random(0)
    for _ in range(200):
        xs = [rnd.randint(0, 5) for _ in range(rnd.randint(1, 7))]
        ys = [rnd.randint(0, 5) for _ in range(rnd.randint(1, 7))]
        wins = sum((x > y) + 0.5 * (x == y) for x in xs for y in ys)
        assert vargha_delaney_a12(xs, ys) == wins / (len(xs) * len(ys))


def test_effect_magnitude():
    assert effect_magnitude(0.5) == "negligible"
    assert effect_magnitude(0.9) == "large"
    assert effect_magnitude(0.1) == "large"


def test_empty_samples_rejected():
    with pytest.raises(ValueError):
        wilcoxon_rank_sum([], [1])
    with pytest.raises(ValueError):
        vargha_delaney_a12([1], [])
