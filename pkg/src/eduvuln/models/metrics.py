"""ROC curves, tie-aware AUC, and the 2x4 actual-vs-level confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep ROC points from (0,0) to (1,1), ties grouped."""

    points: tuple[tuple[float, float], ...]  # (fpr, tpr)
    thresholds: tuple[float, ...]            # score cut for each interior point

    def trapezoid_area(self) -> float:
        fpr = np.array([p[0] for p in self.points])
        tpr = np.array([p[1] for p in self.points])
        return float(np.trapezoid(tpr, fpr))


def roc_auc(scores, labels) -> tuple[RocCurve, float]:
    """ROC curve and tie-aware Mann-Whitney AUC.

    Higher score must mean higher predicted risk. AUC is
    P(score+ > score-) + 0.5 * P(score+ = score-), computed from midranks.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels lengths differ")
    if not np.all(np.isin(np.unique(labels), (0, 1))):
        raise ValueError("labels must be binary 0/1")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise DegenerateDataError("both classes must be present to compute AUC")

    order = np.argsort(scores, kind="mergesort")
    s_sorted = scores[order]
    n = scores.shape[0]
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(ranks[np.asarray(labels) == 1].sum())
    auc = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    # Threshold sweep, descending over distinct scores.
    desc = order[::-1]
    s_desc = scores[desc]
    l_desc = np.asarray(labels)[desc]
    points = [(0.0, 0.0)]
    thresholds: list[float] = []
    tp = fp = 0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and s_desc[j + 1] == s_desc[i]:
            j += 1
        tp += int(np.sum(l_desc[i:j + 1] == 1))
        fp += int(np.sum(l_desc[i:j + 1] == 0))
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(float(s_desc[i]))
        i = j + 1
    return RocCurve(tuple(points), tuple(thresholds)), float(auc)


def confusion_by_level(actual_at_risk, levels) -> np.ndarray:
    """Counts[r, c]: actual class r (0 safe, 1 at risk) observed at
    vulnerability level c (0..3)."""
    actual = np.asarray(actual_at_risk)
    lv = np.asarray(levels)
    if actual.shape[0] != lv.shape[0]:
        raise ValueError("actual and levels lengths differ")
    if not np.all(np.isin(np.unique(actual), (0, 1))):
        raise ValueError("actual_at_risk must be binary 0/1")
    if lv.size and (lv.min() < 0 or lv.max() > 3):
        raise ValueError("levels must be integers in 0..3")
    out = np.zeros((2, 4), dtype=np.int64)
    for r in (0, 1):
        for c in range(4):
            out[r, c] = int(np.sum((actual == r) & (lv == c)))
    return out
