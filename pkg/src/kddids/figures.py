"""Matplotlib renderings written next to the delimited report output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ConfusionMatrix
from .report import EvaluationReport

# Strip the Software tag so identical inputs give identical PNG bytes.
_PNG_META = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def save_confusion_heatmap(matrix: ConfusionMatrix, path, title: str = "") -> None:
    """Row-normalized confusion heatmap with percentage annotations."""
    counts = matrix.counts.astype(np.float64)
    row_sums = counts.sum(axis=1, keepdims=True)
    norm = np.divide(counts, np.maximum(row_sums, 1.0))
    k = len(matrix.class_order)

    fig, ax = plt.subplots(figsize=(1.1 * k + 2.0, 1.0 * k + 1.5))
    ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(k), matrix.class_order, rotation=45, ha="right")
    ax.set_yticks(range(k), matrix.class_order)
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    if title:
        ax.set_title(title)
    for i in range(k):
        for j in range(k):
            color = "white" if norm[i, j] > 0.5 else "black"
            ax.text(j, i, f"{norm[i, j] * 100:.1f}%", ha="center",
                    va="center", color=color, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_class_rates(report: EvaluationReport, path) -> None:
    """Grouped bars of per-class TP rate, precision, and ROC area."""
    r = report.rates
    k = len(report.class_order)
    x = np.arange(k)
    width = 0.27
    roc = r.roc_area if r.roc_area is not None else np.zeros(k)

    fig, ax = plt.subplots(figsize=(1.4 * k + 2.5, 4.0))
    ax.bar(x - width, r.tp_rate, width, label="TP rate")
    ax.bar(x, r.precision, width, label="precision")
    ax.bar(x + width, roc, width, label="ROC area")
    ax.set_xticks(x, report.class_order, rotation=30, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("rate")
    ax.set_title(f"{report.display_name}: per-class rates")
    ax.legend(loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def save_comparison(reports: list[EvaluationReport], path) -> None:
    """Accuracy and kappa side by side for several models."""
    names = [r.display_name for r in reports]
    acc = [r.accuracy for r in reports]
    kap = [r.kappa for r in reports]
    x = np.arange(len(reports))
    width = 0.35

    fig, ax = plt.subplots(figsize=(1.6 * len(reports) + 3.0, 4.0))
    bars_a = ax.bar(x - width / 2, acc, width, label="accuracy")
    bars_k = ax.bar(x + width / 2, kap, width, label="kappa")
    for bar, v in zip(bars_a, acc):
        ax.text(bar.get_x() + bar.get_width() / 2, v + 0.01, f"{v:.4f}",
                ha="center", fontsize=8)
    for bar, v in zip(bars_k, kap):
        ax.text(bar.get_x() + bar.get_width() / 2, v + 0.01, f"{v:.4f}",
                ha="center", fontsize=8)
    ax.set_xticks(x, names)
    ax.set_ylim(0.0, 1.1)
    ax.legend(loc="lower right")
    ax.set_title("model comparison")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
