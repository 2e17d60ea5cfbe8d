"""Precision / recall / F2 from confusion counts.

F2 weights recall four times as heavily as precision, matching the cost
asymmetry of missing an oncoming relapse versus raising a false alarm.
"""

from __future__ import annotations


def f2_score(precision: float, recall: float) -> float:
    """F2 = 5 * precision * recall / (4 * precision + recall); 0 when undefined."""
    denom = 4.0 * precision + recall
    if denom == 0.0:
        return 0.0
    return 5.0 * precision * recall / denom


def f2_from_counts(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    """(precision, recall, f2) from pooled confusion counts; 0 for empty denominators."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError("confusion counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall, f2_score(precision, recall)
