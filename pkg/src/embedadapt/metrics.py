"""Binary classification metrics: F1 (positive class 1), accuracy, ROC AUC."""

from __future__ import annotations

import numpy as np


def _check_binary(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be 1-D")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{what} must contain only 0 and 1")
    return arr


def _check_aligned(y_true, y_other, what: str):
    y_true = _check_binary(y_true, "y_true")
    if y_true.size == 0:
        raise ValueError("empty label vector")
    if len(y_other) != y_true.size:
        raise ValueError(f"y_true and {what} lengths differ")
    return y_true


def f1_score(y_true, y_pred) -> float:
    """2TP / (2TP + FP + FN) for class 1; defined as 0.0 when no positives
    appear in either truth or prediction (zero denominator)."""
    y_true = _check_aligned(y_true, y_pred, "y_pred")
    y_pred = _check_binary(y_pred, "y_pred")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def accuracy_score(y_true, y_pred) -> float:
    y_true = _check_aligned(y_true, y_pred, "y_pred")
    y_pred = _check_binary(y_pred, "y_pred")
    return float(np.mean(y_true == y_pred))


def auc_score(y_true, scores) -> float:
    """ROC AUC via the rank statistic, ties getting average ranks.

    Equals the probability a random positive outranks a random negative,
    counting score ties as 1/2. Errors when truth is single-class (AUC is
    undefined). Invariant under strictly monotone score transforms.
    """
    y_true = _check_aligned(y_true, scores, "scores")
    scores = np.asarray(scores, np.float64)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int(np.sum(y_true == 1))
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: y_true contains a single class")

    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(y_true.size, np.float64)
    i = 0
    while i < y_true.size:
        j = i
        while j + 1 < y_true.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # average rank for the tie block [i, j], 1-based ranks
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[y_true == 1]))
    u_stat = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u_stat / (n_pos * n_neg)
