"""Classification metrics computed from a fixed-class-order confusion matrix
and from class-probability predictions.

Conventions follow the usual multi-class reporting: one-vs-rest FP rates,
support-weighted averages, rank-based ROC areas with ties counting half,
and MAE/RMSE taken over every (instance, class) indicator pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class MetricsError(ValueError):
    pass


class LengthMismatch(MetricsError):
    pass


class UnknownClass(MetricsError):
    pass


class EmptyMatrix(MetricsError):
    pass


@dataclass
class ConfusionMatrix:
    """K x K counts, cell [true, predicted], in a fixed class order."""

    counts: np.ndarray
    class_order: tuple[str, ...]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.class_order)
        if self.counts.shape != (k, k):
            raise MetricsError(
                f"matrix shape {self.counts.shape} does not fit {k} classes"
            )
        if (self.counts < 0).any():
            raise MetricsError("negative cell count")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _to_indices(labels, class_order: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(class_order)}
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        if isinstance(lab, (int, np.integer)):
            j = int(lab)
            if not 0 <= j < len(class_order):
                raise UnknownClass(f"class index {j} out of range")
        else:
            if lab not in index:
                raise UnknownClass(f"class {lab!r} not in class order")
            j = index[lab]
        out[i] = j
    return out


def confusion(pred, truth, class_order: Sequence[str]) -> ConfusionMatrix:
    """Exact cell counts; accepts class names or indices."""
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(truth)} truths")
    p = _to_indices(pred, class_order)
    t = _to_indices(truth, class_order)
    k = len(class_order)
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts, tuple(class_order))


def accuracy(m: ConfusionMatrix) -> tuple[float, int, int]:
    """(fraction, correct, incorrect) from the matrix diagonal."""
    total = m.total
    if total == 0:
        raise EmptyMatrix("no evaluated instances")
    correct = int(np.trace(m.counts))
    return correct / total, correct, total - correct


def kappa(m: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e); 0 when p_e = 1."""
    total = m.total
    if total == 0:
        raise EmptyMatrix("no evaluated instances")
    p_o = float(np.trace(m.counts)) / total
    p_e = float((m.row_totals() * m.col_totals()).sum()) / (total * total)
    if p_e >= 1.0:
        return 0.0
    return (p_o - p_e) / (1.0 - p_e)


def error_scores(probs: np.ndarray, truth) -> tuple[float, float]:
    """(MAE, RMSE) of probability vectors against one-hot indicators,
    averaged over every (instance, class) pair."""
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth)
    if probs.ndim != 2 or len(probs) != len(truth):
        raise LengthMismatch(
            f"{probs.shape} probability matrix vs {len(truth)} truths"
        )
    n, k = probs.shape
    indicators = np.zeros((n, k), dtype=np.float64)
    indicators[np.arange(n), truth.astype(np.int64)] = 1.0
    diff = indicators - probs
    mae = float(np.abs(diff).mean())
    rmse = float(np.sqrt((diff ** 2).mean()))
    return mae, rmse


@dataclass
class ClassRates:
    """Per-class TP rate, FP rate, precision (and ROC area when attached),
    plus support-weighted averages."""

    class_order: tuple[str, ...]
    supports: np.ndarray
    tp_rate: np.ndarray
    fp_rate: np.ndarray
    precision: np.ndarray
    weighted_tp: float
    weighted_fp: float
    weighted_precision: float
    roc_area: np.ndarray | None = None
    weighted_roc: float | None = None


def class_rates(m: ConfusionMatrix) -> ClassRates:
    """One-vs-rest rates per class; zero-support classes rate 0, weight 0."""
    total = m.total
    if total == 0:
        raise EmptyMatrix("no evaluated instances")
    k = len(m.class_order)
    rows = m.row_totals().astype(np.float64)
    cols = m.col_totals().astype(np.float64)
    diag = np.diag(m.counts).astype(np.float64)
    tp = np.where(rows > 0, diag / np.maximum(rows, 1.0), 0.0)
    fp_den = total - rows
    fp = np.where(fp_den > 0, (cols - diag) / np.maximum(fp_den, 1.0), 0.0)
    prec = np.where(cols > 0, diag / np.maximum(cols, 1.0), 0.0)
    w = rows / total
    return ClassRates(
        class_order=m.class_order,
        supports=rows.astype(np.int64),
        tp_rate=tp,
        fp_rate=fp,
        precision=prec,
        weighted_tp=float((w * tp).sum()),
        weighted_fp=float((w * fp).sum()),
        weighted_precision=float((w * prec).sum()),
    )


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(len(x), dtype=np.float64)
    start = 0
    n = len(x)
    while start < n:
        end = start
        while end + 1 < n and sx[end + 1] == sx[start]:
            end += 1
        ranks[order[start:end + 1]] = (start + end) / 2.0 + 1.0
        start = end + 1
    return ranks


def roc_auc(probs: np.ndarray, truth, class_order: Sequence[str]
            ) -> tuple[np.ndarray, float]:
    """One-vs-rest AUC per class via the rank-sum statistic (ties count 1/2),
    plus the support-weighted average over classes where AUC is defined."""
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.int64)
    if len(probs) != len(truth):
        raise LengthMismatch(f"{len(probs)} score rows vs {len(truth)} truths")
    k = len(class_order)
    aucs = np.zeros(k, dtype=np.float64)
    weights = np.zeros(k, dtype=np.float64)
    for c in range(k):
        pos = truth == c
        n_pos = int(pos.sum())
        n_neg = len(truth) - n_pos
        if n_pos == 0 or n_neg == 0:
            continue  # AUC undefined; reported as 0 with weight 0
        ranks = _average_ranks(probs[:, c])
        rank_sum = float(ranks[pos].sum())
        aucs[c] = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
        weights[c] = n_pos
    total_w = weights.sum()
    weighted = float((aucs * weights).sum() / total_w) if total_w > 0 else 0.0
    return aucs, weighted


def attach_roc(rates: ClassRates, probs: np.ndarray, truth) -> ClassRates:
    aucs, weighted = roc_auc(probs, truth, rates.class_order)
    rates.roc_area = aucs
    rates.weighted_roc = weighted
    return rates


def predictions_from_proba(probs: np.ndarray) -> np.ndarray:
    """Argmax class indices; ties break toward the earliest class."""
    return np.argmax(np.asarray(probs), axis=1)
