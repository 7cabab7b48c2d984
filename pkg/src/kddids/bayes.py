"""Bayes-rule classifier over categorical features with Laplace smoothing.

Assumes a fixed independence structure: the class posterior is the prior
times the product of per-feature conditionals, evaluated in log space and
normalized by log-sum-exp.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import BAYES, EncodedDataset, OneHot, Bins

NEG_INF = float("-inf")


class BayesError(ValueError):
    pass


class EmptyTrainingSet(BayesError):
    pass


class SpecMismatch(BayesError):
    pass


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise BayesError("alpha must be non-negative")


@dataclass
class BayesModel:
    """Smoothed class priors plus per-feature conditional tables.

    ``cond_log[f]`` has shape (K, V_f): log P(value | class). V_f counts the
    reserved "unseen" category for symbolic features, so prediction-time
    novelties keep nonzero mass whenever alpha > 0.
    """

    log_priors: np.ndarray
    cond_log: list
    n_categories: tuple[int, ...]
    alpha: float
    class_order: tuple[str, ...]
    encoder_fingerprint: str = ""

    @property
    def n_features(self) -> int:
        return len(self.cond_log)


def _rule_categories(rule) -> int:
    if isinstance(rule, (OneHot, Bins)):
        return rule.n_categories
    raise BayesError(f"bayes encoding cannot use rule {type(rule).__name__}")


def fit(dataset: EncodedDataset, config: SmoothingConfig | None = None) -> BayesModel:
    """Estimate smoothed priors and conditional tables from training counts.

    priors      = (count_h + alpha) / (N + alpha K)
    conditionals = (count_{v,h} + alpha) / (count_h + alpha V_f)
    """
    config = config or SmoothingConfig()
    if dataset.spec.mode != BAYES:
        raise BayesError("bayes training needs a bayes-mode encoding")
    n = len(dataset)
    if n == 0:
        raise EmptyTrainingSet("no training records")
    alpha = config.alpha
    k = dataset.n_classes
    y = dataset.y
    X = dataset.matrix

    class_counts = np.bincount(y, minlength=k).astype(np.float64)
    with np.errstate(divide="ignore"):
        log_priors = np.log(
            (class_counts + alpha) / (n + alpha * k)
        )

    n_categories = tuple(_rule_categories(r) for r in dataset.spec.rules)
    cond_log = []
    for f, v_f in enumerate(n_categories):
        counts = np.zeros((k, v_f), dtype=np.float64)
        np.add.at(counts, (y, X[:, f]), 1.0)
        denom = class_counts + alpha * v_f
        with np.errstate(divide="ignore", invalid="ignore"):
            table = np.log(counts + alpha) - np.log(denom)[:, None]
        table[np.isnan(table)] = NEG_INF  # empty class with alpha = 0
        cond_log.append(table)

    return BayesModel(
        log_priors=log_priors,
        cond_log=cond_log,
        n_categories=n_categories,
        alpha=alpha,
        class_order=dataset.spec.class_order,
        encoder_fingerprint=dataset.spec.fingerprint(),
    )


def _check_codes(model: BayesModel, codes: np.ndarray) -> None:
    if codes.shape[-1] != model.n_features:
        raise SpecMismatch(
            f"record has {codes.shape[-1]} features, model expects {model.n_features}"
        )


def log_scores(model: BayesModel, codes: np.ndarray) -> np.ndarray:
    """Unnormalized log posterior of each class for one encoded record."""
    codes = np.asarray(codes)
    _check_codes(model, codes)
    scores = model.log_priors.copy()
    for f in range(model.n_features):
        code = int(codes[f])
        if not 0 <= code < model.n_categories[f]:
            raise SpecMismatch(
                f"feature {f}: category {code} outside table of "
                f"{model.n_categories[f]}"
            )
        scores += model.cond_log[f][:, code]
    return scores


def _normalize_log(scores: np.ndarray) -> np.ndarray:
    finite = scores[np.isfinite(scores)]
    if len(finite) == 0:
        return np.full(len(scores), 1.0 / len(scores))
    m = finite.max()
    expd = np.exp(scores - m)
    return expd / expd.sum()


def posterior(model: BayesModel, codes: np.ndarray) -> np.ndarray:
    """Class posterior vector; the marginal falls out as the normalizer."""
    return _normalize_log(log_scores(model, codes))


def predict_dist(model: BayesModel, codes: np.ndarray) -> np.ndarray:
    """Alias of posterior; argmax is the prediction, ties break by class order."""
    return posterior(model, codes)


def predict_proba(model: BayesModel, dataset: EncodedDataset) -> np.ndarray:
    """Posterior matrix for every record of a bayes-mode dataset."""
    if dataset.spec.mode != BAYES:
        raise SpecMismatch("expected a bayes-mode encoding")
    X = dataset.matrix
    _check_codes(model, X)
    n = len(X)
    scores = np.tile(model.log_priors, (n, 1))
    for f in range(model.n_features):
        scores += model.cond_log[f][:, X[:, f]].T
    m = scores.max(axis=1, keepdims=True)
    safe_m = np.where(np.isfinite(m), m, 0.0)
    expd = np.exp(scores - safe_m)
    sums = expd.sum(axis=1, keepdims=True)
    k = scores.shape[1]
    with np.errstate(invalid="ignore"):
        proba = np.where(sums > 0, expd / np.maximum(sums, 1e-300), 1.0 / k)
    return proba


def export_tables(model: BayesModel, feature_names) -> str:
    """Conditional tables as CSV rows: feature, class, category, probability."""
    lines = ["feature,class,category,probability"]
    for f, table in enumerate(model.cond_log):
        for ki, cls in enumerate(model.class_order):
            for v in range(model.n_categories[f]):
                p = float(np.exp(table[ki, v]))
                lines.append(f"{feature_names[f]},{cls},{v},{p:.12g}")
    return "\n".join(lines) + "\n"
