"""Term-prediction and filtering quality metrics.

Undefined values (empty denominators) are returned as ``None`` and are
expected to be excluded from aggregates.
"""
from __future__ import annotations


def accuracy_metric(recommended, novel, matcher) -> float | None:
    """Share of recommended terms that match at least one novel term."""
    recommended = list(recommended)
    if not recommended:
        return None
    novel = list(novel)
    hits = sum(1 for t in recommended if any(matcher(t, n) for n in novel))
    return hits / len(recommended)


def coverage_metric(recommended, novel, matcher) -> float | None:
    """Share of novel terms matched by at least one recommended term.

    A novel term hinted at by several recommendations still counts once.
    """
    novel = list(novel)
    if not novel:
        return None
    recommended = list(recommended)
    hits = sum(1 for n in novel if any(matcher(t, n) for t in recommended))
    return hits / len(novel)


def classification_metrics(tp: int, fp: int, tn: int, fn: int) -> tuple:
    """``(accuracy, precision, recall)``; precision/recall are ``None`` when undefined."""
    if min(tp, fp, tn, fn) < 0:
        raise ValueError("counts must be non-negative")
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("at least one classification is required")
    accuracy = (tp + tn) / total
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return accuracy, precision, recall
