"""Wilcoxon rank-sum test and Vargha-Delaney A12 effect size."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_N = 8


def wilcoxon_rank_sum(xs, ys, exact: bool | None = None) -> float:
    """Two-sided p-value of the Wilcoxon rank-sum (Mann-Whitney) test.

    With both samples of size <= 8 the null distribution of the rank sum is
    enumerated exactly (mid-ranks for ties); otherwise a normal approximation
    with tie and continuity correction is used.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled)
    n = n1 + n2
    observed = ranks[:n1].sum()
    expected = n1 * (n + 1) / 2.0
    if exact is None:
        exact = max(n1, n2) <= EXACT_MAX_N
    if exact:
        dev = abs(observed - expected) - 1e-9
        total = extreme = 0
        for chosen in combinations(range(n), n1):
            total += 1
            if abs(ranks[list(chosen)].sum() - expected) >= dev:
                extreme += 1
        return extreme / total
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts ** 3 - tie_counts)) / (n * (n - 1))
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if variance <= 0:
        return 1.0
    u = observed - n1 * (n1 + 1) / 2.0
    z = max(0.0, abs(u - n1 * n2 / 2.0) - 0.5) / math.sqrt(variance)
    return float(min(1.0, 2.0 * norm.sf(z)))


def vargha_delaney_a12(xs, ys) -> float:
    """Probability that a value from ``xs`` exceeds one from ``ys`` (ties count half)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both samples must be non-empty")
    greater = np.sum(x[:, None] > y[None, :])
    ties = np.sum(x[:, None] == y[None, :])
    return float((greater + 0.5 * ties) / (len(x) * len(y)))


def effect_magnitude(a12: float) -> str:
    """Conventional small/medium/large labels for an A12 value."""
    d = abs(a12 - 0.5)
    if d < 0.06:
        return "negligible"
    if d < 0.14:
        return "small"
    if d < 0.21:
        return "medium"
    return "large"
