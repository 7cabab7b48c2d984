"""Evaluation reports: assembly from predictions, plus text/CSV/key=value
rendering in the three-table shape (statistics, weighted rates, accuracy).

Persisted artifacts are deterministic; wall-clock timings are kept on the
report object and rendered only on request.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    ClassRates,
    ConfusionMatrix,
    accuracy,
    attach_roc,
    class_rates,
    confusion,
    error_scores,
    kappa,
    predictions_from_proba,
)

CONVENTION_NOTES = (
    "kappa: (p_o - p_e) / (1 - p_e) with marginal-product chance agreement",
    "mae/rmse: averaged over every (instance, class) indicator pair",
    "fp rate: one-vs-rest, denominator excludes the class's own support",
    "roc area: rank-sum statistic, ties count 1/2; undefined classes weigh 0",
    "weighted averages: weights are true-class supports",
)


@dataclass
class EvaluationReport:
    model_name: str
    model_kind: str
    class_order: tuple[str, ...]
    matrix: ConfusionMatrix
    accuracy: float
    correct: int
    incorrect: int
    kappa: float
    mae: float
    rmse: float
    rates: ClassRates
    seeds: dict = field(default_factory=dict)
    config_hash: str = ""
    train_seconds: float | None = None
    eval_seconds: float | None = None
    notes: tuple[str, ...] = ()

    @property
    def display_name(self) -> str:
        return self.model_name if self.model_name else "unnamed"


def build_report(
    model_name: str,
    model_kind: str,
    probs: np.ndarray,
    truth: np.ndarray,
    class_order: tuple[str, ...],
    seeds: dict | None = None,
    config_hash: str = "",
    train_seconds: float | None = None,
    eval_seconds: float | None = None,
    notes: tuple[str, ...] = (),
) -> EvaluationReport:
    """Assemble every reported metric from probability predictions."""
    pred = predictions_from_proba(probs)
    m = confusion(pred, truth, class_order)
    frac, correct, incorrect = accuracy(m)
    rates = attach_roc(class_rates(m), probs, truth)
    mae, rmse = error_scores(probs, truth)
    return EvaluationReport(
        model_name=model_name,
        model_kind=model_kind,
        class_order=tuple(class_order),
        matrix=m,
        accuracy=frac,
        correct=correct,
        incorrect=incorrect,
        kappa=kappa(m),
        mae=mae,
        rmse=rmse,
        rates=rates,
        seeds=dict(seeds or {}),
        config_hash=config_hash,
        train_seconds=train_seconds,
        eval_seconds=eval_seconds,
        notes=tuple(notes),
    )


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def render_text(report: EvaluationReport, include_timing: bool = False) -> str:
    """Aligned text rendering: statistics, weighted rates, accuracy, then the
    per-class breakdown and confusion matrix."""
    out = io.StringIO()
    w = out.write
    w(f"=== Evaluation: {report.display_name} ({report.model_kind}) ===\n\n")

    w("Statistical values\n")
    w(f"  Kappa statistic          {_fmt(report.kappa)}\n")
    w(f"  Mean absolute error      {_fmt(report.mae)}\n")
    w(f"  Root mean squared error  {_fmt(report.rmse)}\n\n")

    r = report.rates
    w("Weighted average rates\n")
    w("  TP Rate   FP Rate   Precision   ROC Area\n")
    roc = r.weighted_roc if r.weighted_roc is not None else 0.0
    w(f"  {_fmt(r.weighted_tp)}    {_fmt(r.weighted_fp)}    "
      f"{_fmt(r.weighted_precision)}      {_fmt(roc)}\n\n")

    w("Accuracy\n")
    w(f"  Correctly classified instances    {report.correct}\n")
    w(f"  Incorrectly classified instances  {report.incorrect}\n")
    w(f"  correct / incorrect / accuracy:   "
      f"{report.correct} / {report.incorrect} / {report.accuracy * 100:.4f} %\n\n")

    w("Per-class rates\n")
    name_w = max(len(c) for c in report.class_order)
    w(f"  {'class'.ljust(name_w)}  support  tp_rate  fp_rate  precision  roc_area\n")
    for i, cls in enumerate(report.class_order):
        auc = r.roc_area[i] if r.roc_area is not None else 0.0
        w(f"  {cls.ljust(name_w)}  {int(r.supports[i]):>7}  "
          f"{_fmt(r.tp_rate[i])}   {_fmt(r.fp_rate[i])}   "
          f"{_fmt(r.precision[i])}     {_fmt(auc)}\n")
    w("\n")

    w("Confusion matrix (rows = truth, columns = predicted)\n")
    cell_w = max(7, *(len(c) for c in report.class_order))
    header = "  " + " ".join(c.rjust(cell_w) for c in report.class_order)
    w(f"  {''.ljust(name_w)}{header}\n")
    for i, cls in enumerate(report.class_order):
        row = " ".join(
            str(int(v)).rjust(cell_w) for v in report.matrix.counts[i]
        )
        w(f"  {cls.ljust(name_w)}  {row}\n")
    w("\n")

    if report.seeds:
        seed_str = " ".join(f"{k}={v}" for k, v in sorted(report.seeds.items()))
        w(f"Seeds: {seed_str}\n")
    if report.config_hash:
        w(f"Config hash: {report.config_hash}\n")
    if include_timing:
        if report.train_seconds is not None:
            w(f"Training time: {report.train_seconds:.1f} s\n")
        if report.eval_seconds is not None:
            w(f"Evaluation time: {report.eval_seconds:.1f} s\n")
    for note in report.notes:
        w(f"Note: {note}\n")
    w("\nConventions:\n")
    for note in CONVENTION_NOTES:
        w(f"  - {note}\n")
    return out.getvalue()


def _metric_items(report: EvaluationReport) -> list[tuple[str, object]]:
    """Flat (key, value) pairs shared by the CSV and key=value renderings."""
    r = report.rates
    items: list[tuple[str, object]] = [
        ("model_name", report.display_name),
        ("model_kind", report.model_kind),
        ("accuracy", report.accuracy),
        ("correct", report.correct),
        ("incorrect", report.incorrect),
        ("kappa", report.kappa),
        ("mae", report.mae),
        ("rmse", report.rmse),
        ("weighted.tp_rate", r.weighted_tp),
        ("weighted.fp_rate", r.weighted_fp),
        ("weighted.precision", r.weighted_precision),
        ("weighted.roc_area", r.weighted_roc if r.weighted_roc is not None else 0.0),
    ]
    for i, cls in enumerate(report.class_order):
        items.append((f"class.{cls}.support", int(r.supports[i])))
        items.append((f"class.{cls}.tp_rate", float(r.tp_rate[i])))
        items.append((f"class.{cls}.fp_rate", float(r.fp_rate[i])))
        items.append((f"class.{cls}.precision", float(r.precision[i])))
        auc = float(r.roc_area[i]) if r.roc_area is not None else 0.0
        items.append((f"class.{cls}.roc_area", auc))
    for i, t in enumerate(report.class_order):
        for j, p in enumerate(report.class_order):
            items.append(
                (f"confusion.{t}.{p}", int(report.matrix.counts[i, j]))
            )
    for k, v in sorted(report.seeds.items()):
        items.append((f"seed.{k}", int(v)))
    if report.config_hash:
        items.append(("config_hash", report.config_hash))
    return items


def render_csv(report: EvaluationReport) -> str:
    lines = ["key,value"]
    for key, value in _metric_items(report):
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key},{value}")
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> dict:
    """Inverse of render_csv: numeric strings come back as numbers."""
    out: dict = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "key,value":
        raise ValueError("not a report CSV")
    for line in lines[1:]:
        key, _, raw = line.partition(",")
        try:
            value: object = int(raw)
        except ValueError:
            try:
                value = float(raw)
            except ValueError:
                value = raw
        out[key] = value
    return out


def render_kv(report: EvaluationReport) -> str:
    lines = []
    for key, value in _metric_items(report):
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def render_comparison(reports: list[EvaluationReport]) -> str:
    """Side-by-side tables across models, one row per model."""
    out = io.StringIO()
    w = out.write
    name_w = max(12, *(len(r.display_name) for r in reports))

    w("Statistical values\n")
    w(f"  {'model'.ljust(name_w)}  kappa   mae     rmse\n")
    for r in reports:
        w(f"  {r.display_name.ljust(name_w)}  {_fmt(r.kappa)}  "
          f"{_fmt(r.mae)}  {_fmt(r.rmse)}\n")
    w("\nWeighted average rates\n")
    w(f"  {'model'.ljust(name_w)}  tp_rate  fp_rate  precision  roc_area\n")
    for r in reports:
        roc = r.rates.weighted_roc if r.rates.weighted_roc is not None else 0.0
        w(f"  {r.display_name.ljust(name_w)}  {_fmt(r.rates.weighted_tp)}   "
          f"{_fmt(r.rates.weighted_fp)}   {_fmt(r.rates.weighted_precision)}     "
          f"{_fmt(roc)}\n")
    w("\nAccuracy\n")
    w(f"  {'model'.ljust(name_w)}  correct  incorrect  accuracy\n")
    for r in reports:
        w(f"  {r.display_name.ljust(name_w)}  {r.correct:>7}  {r.incorrect:>9}  "
          f"{r.accuracy * 100:.4f} %\n")
    return out.getvalue()


def comparison_csv(reports: list[EvaluationReport]) -> str:
    lines = ["model,kind,accuracy,correct,incorrect,kappa,mae,rmse,"
             "weighted_tp,weighted_fp,weighted_precision,weighted_roc"]
    for r in reports:
        roc = r.rates.weighted_roc if r.rates.weighted_roc is not None else 0.0
        lines.append(
            f"{r.display_name},{r.model_kind},{r.accuracy!r},{r.correct},"
            f"{r.incorrect},{r.kappa!r},{r.mae!r},{r.rmse!r},"
            f"{r.rates.weighted_tp!r},{r.rates.weighted_fp!r},"
            f"{r.rates.weighted_precision!r},{roc!r}"
        )
    return "\n".join(lines) + "\n"
