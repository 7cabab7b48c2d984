"""Decision-tree induction with entropy/information-gain splits.

Grows a univariate tree depth-first: nominal features split one branch per
training value, continuous features split at the best midpoint threshold.
The selection criterion is gain ratio by default (plain information gain is
selectable), with bottom-up pessimistic-error pruning and Laplace-smoothed
probabilistic leaves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .encoding import EncodedDataset, TREE

INFO_GAIN = "info_gain"
GAIN_RATIO = "gain_ratio"

PRUNE_OFF = "off"
PRUNE_PESSIMISTIC = "pessimistic"

# Gains at or below this are floating-point noise around zero.
GAIN_EPS = 1e-12


class TreeError(ValueError):
    pass


class EmptyDistribution(TreeError):
    pass


class PartitionMismatch(TreeError):
    pass


class EmptyTrainingSet(TreeError):
    pass


class SchemaMismatch(TreeError):
    pass


def entropy(counts: Sequence[float]) -> float:
    """Shannon entropy in bits of a class-count distribution."""
    total = float(sum(counts))
    if total <= 0:
        raise EmptyDistribution("entropy of an empty distribution")
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def information_gain(parent: Sequence[float],
                     children: Sequence[Sequence[float]]) -> float:
    """Parent entropy minus the support-weighted child entropies."""
    n = float(sum(parent))
    if n <= 0:
        raise EmptyDistribution("information gain over an empty parent")
    child_totals = [float(sum(c)) for c in children]
    if not math.isclose(sum(child_totals), n, rel_tol=0, abs_tol=1e-9):
        raise PartitionMismatch(
            f"children cover {sum(child_totals)} of {n} parent records"
        )
    gain = entropy(parent)
    for c, nc in zip(children, child_totals):
        if nc > 0:
            gain -= (nc / n) * entropy(c)
    return gain


@dataclass(frozen=True)
class NominalSplit:
    feature: int
    values: tuple[str, ...]  # one branch per training value, in sorted order

    def branch_of(self, v) -> int | None:
        try:
            return self.values.index(v)
        except ValueError:
            return None

    def describe(self, names):
        return f"{names[self.feature]} in {{{', '.join(self.values)}}}"


@dataclass(frozen=True)
class ContinuousSplit:
    feature: int
    threshold: float

    def branch_of(self, v) -> int:
        return 0 if v <= self.threshold else 1

    def describe(self, names):
        return f"{names[self.feature]} <= {self.threshold:g}"


@dataclass
class Leaf:
    counts: np.ndarray  # per-class training counts, fixed class order

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def node_count(self) -> int:
        return 1

    def depth(self) -> int:
        return 0


@dataclass
class Internal:
    split: NominalSplit | ContinuousSplit
    children: list
    fallback: int  # branch with the largest training mass, for unseen values
    counts: np.ndarray  # aggregate class counts at this node

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def depth(self) -> int:
        return 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    split: NominalSplit | ContinuousSplit
    gain: float
    score: float  # value of the configured criterion


@dataclass(frozen=True)
class GrowConfig:
    criterion: str = GAIN_RATIO
    min_leaf: int = 2
    max_depth: int | None = None
    pruning: str = PRUNE_PESSIMISTIC
    confidence: float = 0.25

    def __post_init__(self):
        if self.criterion not in (INFO_GAIN, GAIN_RATIO):
            raise TreeError(f"unknown criterion {self.criterion!r}")
        if self.min_leaf < 1:
            raise TreeError("min_leaf must be >= 1")
        if self.pruning not in (PRUNE_OFF, PRUNE_PESSIMISTIC):
            raise TreeError(f"unknown pruning mode {self.pruning!r}")
        if not 0.0 < self.confidence < 1.0:
            raise TreeError("confidence must lie in (0, 1)")


@dataclass
class DecisionTreeModel:
    root: Leaf | Internal
    class_order: tuple[str, ...]
    n_features: int
    encoder_fingerprint: str
    config: GrowConfig = field(default_factory=GrowConfig)

    def node_count(self) -> int:
        return self.root.node_count()

    def depth(self) -> int:
        return self.root.depth()

    def to_text(self, feature_names: Sequence[str]) -> str:
        lines: list[str] = []

        def walk(node, indent):
            pad = "  " * indent
            if isinstance(node, Leaf):
                k = int(np.argmax(node.counts))
                lines.append(
                    f"{pad}-> {self.class_order[k]} {node.counts.tolist()}"
                )
                return
            for b, child in enumerate(node.children):
                if isinstance(node.split, ContinuousSplit):
                    op = "<=" if b == 0 else ">"
                    cond = f"{feature_names[node.split.feature]} {op} {node.split.threshold:g}"
                else:
                    cond = f"{feature_names[node.split.feature]} = {node.split.values[b]}"
                star = " *" if b == node.fallback else ""
                lines.append(f"{pad}{cond}{star}")
                walk(child, indent + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"


def _entropy_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Entropy of each row of a (rows, K) count matrix; empty rows get 0."""
    safe = np.maximum(totals, 1.0)
    p = counts / safe[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(counts > 0, p * np.log2(np.maximum(p, 1e-300)), 0.0)
    return -plogp.sum(axis=1)


class _Induction:
    """Columnar working state shared by best_split and build_tree."""

    def __init__(self, dataset: EncodedDataset):
        if dataset.spec.mode != TREE:
            raise TreeError("decision trees train on tree-mode encodings")
        if len(dataset) == 0:
            raise EmptyTrainingSet("no training records")
        self.y = dataset.y.astype(np.int64)
        self.k = dataset.n_classes
        self.n_features = len(dataset.spec.rules)
        self.cont: dict[int, np.ndarray] = {}
        self.nom_codes: dict[int, np.ndarray] = {}
        self.nom_values: dict[int, tuple[str, ...]] = {}
        for f, col in enumerate(dataset.columns):
            if col.dtype == object:
                values = tuple(sorted(set(col.tolist())))
                lookup = {v: j for j, v in enumerate(values)}
                self.nom_codes[f] = np.fromiter(
                    (lookup[v] for v in col), dtype=np.int64, count=len(col)
                )
                self.nom_values[f] = values
            else:
                self.cont[f] = np.asarray(col, dtype=np.float64)

    def class_counts(self, idx: np.ndarray) -> np.ndarray:
        return np.bincount(self.y[idx], minlength=self.k).astype(np.float64)

    def _score(self, gain: np.ndarray, split_info: np.ndarray,
               criterion: str) -> np.ndarray:
        if criterion == INFO_GAIN:
            return gain
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(split_info > 0, gain / np.maximum(split_info, 1e-300), 0.0)
        return ratio

    def best_continuous(self, f: int, idx: np.ndarray, parent_h: float,
                        criterion: str) -> SplitCandidate | None:
        x = self.cont[f][idx]
        order = np.argsort(x, kind="mergesort")
        xs = x[order]
        ys = self.y[idx][order]
        n = len(xs)
        bpos = np.nonzero(xs[:-1] != xs[1:])[0]
        if len(bpos) == 0:
            return None
        onehot = np.zeros((n, self.k), dtype=np.float64)
        onehot[np.arange(n), ys] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left = cum[bpos]
        total = cum[-1]
        right = total - left
        nl = (bpos + 1).astype(np.float64)
        nr = n - nl
        gain = parent_h - (nl / n) * _entropy_rows(left, nl) \
            - (nr / n) * _entropy_rows(right, nr)
        pl, pr = nl / n, nr / n
        split_info = -(pl * np.log2(pl) + pr * np.log2(pr))
        score = self._score(gain, split_info, criterion)
        valid = gain > GAIN_EPS
        if not valid.any():
            return None
        score = np.where(valid, score, -np.inf)
        best = int(np.argmax(score))  # first max -> lowest threshold
        i = int(bpos[best])
        threshold = (xs[i] + xs[i + 1]) / 2.0
        return SplitCandidate(
            f, ContinuousSplit(f, float(threshold)),
            float(gain[best]), float(score[best]),
        )

    def best_nominal(self, f: int, idx: np.ndarray, parent_h: float,
                     criterion: str) -> SplitCandidate | None:
        codes = self.nom_codes[f][idx]
        values = self.nom_values[f]
        counts = np.zeros((len(values), self.k), dtype=np.float64)
        np.add.at(counts, (codes, self.y[idx]), 1.0)
        sizes = counts.sum(axis=1)
        present = sizes > 0
        if present.sum() < 2:
            return None
        counts = counts[present]
        sizes = sizes[present]
        n = float(len(idx))
        child_h = _entropy_rows(counts, sizes)
        gain = parent_h - float(((sizes / n) * child_h).sum())
        if gain <= GAIN_EPS:
            return None
        p = sizes / n
        split_info = float(-(p * np.log2(p)).sum())
        score = gain if criterion == INFO_GAIN else (
            gain / split_info if split_info > 0 else 0.0
        )
        branch_values = tuple(v for v, keep in zip(values, present) if keep)
        return SplitCandidate(f, NominalSplit(f, branch_values), gain, score)

    def best_split(self, idx: np.ndarray, features: Sequence[int],
                   config: GrowConfig) -> SplitCandidate | None:
        parent_h = entropy(self.class_counts(idx))
        best: SplitCandidate | None = None
        for f in sorted(features):
            if f in self.cont:
                cand = self.best_continuous(f, idx, parent_h, config.criterion)
            else:
                cand = self.best_nominal(f, idx, parent_h, config.criterion)
            if cand is None:
                continue
            if best is None or cand.score > best.score:
                best = cand
        return best

    def partition(self, split, idx: np.ndarray) -> list[np.ndarray]:
        if isinstance(split, ContinuousSplit):
            mask = self.cont[split.feature][idx] <= split.threshold
            return [idx[mask], idx[~mask]]
        codes = self.nom_codes[split.feature][idx]
        values = self.nom_values[split.feature]
        lookup = {values.index(v): b for b, v in enumerate(split.values)}
        out = [[] for _ in split.values]
        for code in np.unique(codes):
            out[lookup[int(code)]] = idx[codes == code]
        return [np.asarray(part, dtype=idx.dtype) for part in out]


def best_split(dataset: EncodedDataset, config: GrowConfig,
               features: Sequence[int] | None = None,
               indices: np.ndarray | None = None) -> SplitCandidate | None:
    """Best split over the candidate features, or None when no split gains.

    Ties break toward the lowest feature index, then the lowest threshold.
    """
    ind = _Induction(dataset)
    if indices is None:
        indices = np.arange(len(dataset))
    if features is None:
        features = range(ind.n_features)
    return ind.best_split(np.asarray(indices), features, config)


def build_tree(dataset: EncodedDataset, config: GrowConfig | None = None
               ) -> DecisionTreeModel:
    """Grow a tree depth-first and prune it per the config."""
    config = config or GrowConfig()
    ind = _Induction(dataset)
    all_nominal = frozenset(ind.nom_codes)

    def grow(idx: np.ndarray, banned: frozenset, depth: int):
        counts = ind.class_counts(idx)
        pure = (counts > 0).sum() <= 1
        if (
            pure
            or len(idx) < 2 * config.min_leaf
            or (config.max_depth is not None and depth >= config.max_depth)
        ):
            return Leaf(counts)
        features = [
            f for f in range(ind.n_features)
            if f not in banned
        ]
        cand = ind.best_split(idx, features, config)
        if cand is None:
            return Leaf(counts)
        parts = ind.partition(cand.split, idx)
        next_banned = (
            banned | {cand.feature}
            if cand.feature in all_nominal
            else banned
        )
        children = [grow(p, next_banned, depth + 1) for p in parts]
        fallback = int(np.argmax([len(p) for p in parts]))
        return Internal(cand.split, children, fallback, counts)

    root = grow(np.arange(len(dataset)), frozenset(), 0)
    model = DecisionTreeModel(
        root=root,
        class_order=dataset.spec.class_order,
        n_features=ind.n_features,
        encoder_fingerprint=dataset.spec.fingerprint(),
        config=config,
    )
    if config.pruning == PRUNE_PESSIMISTIC:
        model = prune(model, config)
    return model


def _added_errors(n: float, e: float, cf: float, z: float) -> float:
    """Extra errors charged on top of the observed count at confidence cf.

    Exact binomial limit below one error (where the normal approximation
    breaks down), linear cap near all-wrong, else the continuity-corrected
    upper confidence bound.
    """
    if e < 1.0:
        base = n * (1.0 - cf ** (1.0 / n))
        if e <= 0.0:
            return base
        return base + e * (_added_errors(n, 1.0, cf, z) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(
        f / n - f * f / n + z * z / (4 * n * n)
    )) / (1 + z * z / n)
    return r * n - e


def _pessimistic_errors(counts: np.ndarray, cf: float, z: float) -> float:
    """Upper-confidence-bound error count estimate for a would-be leaf."""
    n = float(counts.sum())
    if n == 0:
        return 0.0
    e = n - float(counts.max())
    return e + _added_errors(n, e, cf, z)


def prune(model: DecisionTreeModel, config: GrowConfig | None = None
          ) -> DecisionTreeModel:
    """Bottom-up subtree replacement under the pessimistic-error estimate.

    A subtree collapses to a leaf when the leaf's error bound is no worse
    than the sum of its leaves' bounds. Node count never increases.
    """
    config = config or model.config
    cf = config.confidence
    z = NormalDist().inv_cdf(1.0 - cf)

    def walk(node):
        if isinstance(node, Leaf):
            return node, _pessimistic_errors(node.counts, cf, z)
        pruned = []
        subtree_err = 0.0
        for child in node.children:
            new_child, err = walk(child)
            pruned.append(new_child)
            subtree_err += err
        leaf_err = _pessimistic_errors(node.counts, cf, z)
        if leaf_err <= subtree_err:
            return Leaf(node.counts.copy()), leaf_err
        return Internal(node.split, pruned, node.fallback, node.counts), subtree_err

    root, _ = walk(model.root)
    return replace(model, root=root)


def predict_dist(model: DecisionTreeModel, values: tuple) -> np.ndarray:
    """Route a record to its leaf and return the Laplace-smoothed distribution.

    Unseen nominal values take the branch with the largest training mass.
    """
    if len(values) != model.n_features:
        raise SchemaMismatch(
            f"record has {len(values)} features, model expects {model.n_features}"
        )
    node = model.root
    while isinstance(node, Internal):
        branch = node.split.branch_of(values[node.split.feature])
        if branch is None:
            branch = node.fallback
        node = node.children[branch]
    k = len(model.class_order)
    return (node.counts + 1.0) / (node.total + k)


def predict_proba(model: DecisionTreeModel, dataset: EncodedDataset) -> np.ndarray:
    """Class-probability vectors for every record of a tree-mode dataset."""
    n = len(dataset)
    out = np.empty((n, len(model.class_order)), dtype=np.float64)
    for i in range(n):
        out[i] = predict_dist(model, dataset.row(i))
    return out
