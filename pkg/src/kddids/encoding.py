"""Per-classifier feature encoding fitted on training data only.

Three modes:
  tree  - passthrough; the tree splits raw values directly
  mlp   - one-hot symbolic blocks + min-max scaled continuous features
  bayes - symbolic values and equal-frequency-binned continuous values
          as category indices (one reserved index per symbolic feature
          for values unseen in training)
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .schema import (
    CATEGORY_ORDER,
    ERROR_POLICY,
    FeatureSchema,
    KddRecord,
    SYMBOLIC,
    UnknownLabel,
    UnknownLabelPolicy,
    label_to_category,
)

TREE = "tree"
MLP = "mlp"
BAYES = "bayes"

CATEGORY = "category"
FINE = "fine"

CATEGORY_CLASS_ORDER = tuple(c.value for c in CATEGORY_ORDER)


class EncodingError(ValueError):
    pass


class EmptyTrainingSet(EncodingError):
    pass


@dataclass(frozen=True)
class Passthrough:
    width: int = 1

    def describe(self):
        return ["passthrough"]


@dataclass(frozen=True)
class OneHot:
    values: tuple[str, ...]  # sorted distinct training values

    @property
    def width(self) -> int:
        return len(self.values)

    @property
    def n_categories(self) -> int:
        # +1 reserves an index for values unseen in training
        return len(self.values) + 1

    def index_of(self, value: str) -> int:
        i = self.values.index(value) if value in self.values else -1
        return i if i >= 0 else len(self.values)

    def describe(self):
        return ["onehot", list(self.values)]


@dataclass(frozen=True)
class MinMax:
    lo: float
    hi: float
    width: int = 1

    def scale(self, v: float) -> float:
        if self.hi <= self.lo:
            return 0.0
        return min(1.0, max(0.0, (v - self.lo) / (self.hi - self.lo)))

    def describe(self):
        return ["minmax", self.lo, self.hi]


@dataclass(frozen=True)
class Bins:
    cuts: tuple[float, ...]  # sorted upper-inclusive boundaries, len = n_bins - 1

    @property
    def width(self) -> int:
        return 1

    @property
    def n_categories(self) -> int:
        return len(self.cuts) + 1

    def index_of(self, v: float) -> int:
        lo, hi = 0, len(self.cuts)
        while lo < hi:  # bisect_left over cuts
            mid = (lo + hi) // 2
            if self.cuts[mid] < v:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def describe(self):
        return ["bins", list(self.cuts)]


@dataclass(frozen=True)
class EncoderSpec:
    """One rule per feature plus the fixed class order of the experiment."""

    mode: str
    rules: tuple
    class_order: tuple[str, ...]
    target: str  # category | fine
    schema_fingerprint: str

    @property
    def width(self) -> int:
        return sum(r.width for r in self.rules)

    def fingerprint(self) -> str:
        doc = self.describe()
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def describe(self) -> dict:
        return {
            "mode": self.mode,
            "rules": [r.describe() for r in self.rules],
            "class_order": list(self.class_order),
            "target": self.target,
            "schema_fingerprint": self.schema_fingerprint,
        }

    @classmethod
    def from_description(cls, doc: dict) -> "EncoderSpec":
        rules = []
        for entry in doc["rules"]:
            kind = entry[0]
            if kind == "passthrough":
                rules.append(Passthrough())
            elif kind == "onehot":
                rules.append(OneHot(tuple(entry[1])))
            elif kind == "minmax":
                rules.append(MinMax(float(entry[1]), float(entry[2])))
            elif kind == "bins":
                rules.append(Bins(tuple(float(c) for c in entry[1])))
            else:
                raise EncodingError(f"unknown rule kind {kind!r}")
        return cls(
            mode=doc["mode"],
            rules=tuple(rules),
            class_order=tuple(doc["class_order"]),
            target=doc["target"],
            schema_fingerprint=doc["schema_fingerprint"],
        )


class EncodedDataset:
    """Encoded feature matrix plus class indices, bound to its EncoderSpec.

    mlp mode stores a float matrix, bayes an integer category matrix, tree
    mode per-feature columns with raw values.
    """

    def __init__(self, spec: EncoderSpec, y: np.ndarray,
                 matrix: np.ndarray | None = None, columns: list | None = None):
        self.spec = spec
        self.y = y
        self.matrix = matrix
        self.columns = columns

    def __len__(self) -> int:
        return len(self.y)

    @property
    def width(self) -> int:
        return self.spec.width

    def row(self, i: int):
        if self.columns is not None:
            return tuple(col[i] for col in self.columns)
        return self.matrix[i]

    @property
    def n_classes(self) -> int:
        return len(self.spec.class_order)


def class_of(record: KddRecord, target: str,
             policy: UnknownLabelPolicy = ERROR_POLICY) -> str | None:
    """Target class name of a record: 5-way category or the fine label."""
    if target == FINE:
        return record.label
    cat = label_to_category(record.label, policy)
    return None if cat is None else cat.value


def equal_frequency_cuts(values: Sequence[float], n_bins: int) -> tuple[float, ...]:
    """Upper-inclusive bin boundaries at sorted positions (j*n)//k - 1."""
    xs = sorted(values)
    n = len(xs)
    return tuple(xs[(j * n) // n_bins - 1] for j in range(1, n_bins))


def _transpose(records: Sequence[KddRecord]) -> list[tuple]:
    return list(zip(*(r.values for r in records)))


def fit_encoder(
    records: Sequence[KddRecord],
    mode: str,
    schema: FeatureSchema,
    target: str = CATEGORY,
    n_bins: int = 10,
) -> EncoderSpec:
    """Build an EncoderSpec from training records only."""
    if not records:
        raise EmptyTrainingSet("cannot fit an encoder on an empty training set")
    if mode not in (TREE, MLP, BAYES):
        raise EncodingError(f"unknown encoder mode {mode!r}")
    if target not in (CATEGORY, FINE):
        raise EncodingError(f"unknown target {target!r}")

    if target == FINE:
        class_order = tuple(sorted({r.label for r in records}))
    else:
        class_order = CATEGORY_CLASS_ORDER

    cols = _transpose(records)
    rules = []
    for i, feat in enumerate(schema.features):
        if mode == TREE:
            rules.append(Passthrough())
        elif feat.kind == SYMBOLIC:
            rules.append(OneHot(tuple(sorted(set(cols[i])))))
        elif mode == MLP:
            rules.append(MinMax(float(min(cols[i])), float(max(cols[i]))))
        else:  # bayes continuous
            rules.append(Bins(equal_frequency_cuts(cols[i], n_bins)))
    return EncoderSpec(mode, tuple(rules), class_order, target,
                       schema.fingerprint())


def _targets(records: Sequence[KddRecord], spec: EncoderSpec,
             policy: UnknownLabelPolicy) -> np.ndarray:
    index = {c: i for i, c in enumerate(spec.class_order)}
    out = np.empty(len(records), dtype=np.int32)
    for i, r in enumerate(records):
        cls = class_of(r, spec.target, policy)
        if cls is None or cls not in index:
            raise UnknownLabel(
                f"record label {r.label!r} has no class in this experiment"
            )
        out[i] = index[cls]
    return out


def encode(records: Sequence[KddRecord], spec: EncoderSpec,
           policy: UnknownLabelPolicy = ERROR_POLICY) -> EncodedDataset:
    """Encode records under a fitted spec.

    Min-max clamps outside values into [0,1]; a symbolic value unseen in
    training becomes an all-zero one-hot block (mlp) or the reserved
    "unseen" category index (bayes).
    """
    n = len(records)
    y = _targets(records, spec, policy)
    if n == 0:
        if spec.mode == TREE:
            return EncodedDataset(spec, y, columns=[np.empty(0, object)] * len(spec.rules))
        dtype = np.float64 if spec.mode == MLP else np.int32
        return EncodedDataset(spec, y, matrix=np.empty((0, spec.width), dtype=dtype))

    cols = _transpose(records)
    if spec.mode == TREE:
        arrays = []
        for col, rule in zip(cols, spec.rules):
            if isinstance(col[0], str):
                arrays.append(np.array(col, dtype=object))
            else:
                arrays.append(np.asarray(col, dtype=np.float64))
        return EncodedDataset(spec, y, columns=arrays)

    if spec.mode == MLP:
        X = np.zeros((n, spec.width), dtype=np.float64)
        offset = 0
        for col, rule in zip(cols, spec.rules):
            if isinstance(rule, OneHot):
                lookup = {v: j for j, v in enumerate(rule.values)}
                idx = np.fromiter(
                    (lookup.get(v, -1) for v in col), dtype=np.int64, count=n
                )
                seen = idx >= 0
                X[np.nonzero(seen)[0], offset + idx[seen]] = 1.0
            else:
                arr = np.asarray(col, dtype=np.float64)
                if rule.hi > rule.lo:
                    X[:, offset] = np.clip(
                        (arr - rule.lo) / (rule.hi - rule.lo), 0.0, 1.0
                    )
            offset += rule.width
        return EncodedDataset(spec, y, matrix=X)

    # bayes: every feature becomes one category index
    X = np.zeros((n, len(spec.rules)), dtype=np.int32)
    for f, (col, rule) in enumerate(zip(cols, spec.rules)):
        if isinstance(rule, OneHot):
            lookup = {v: j for j, v in enumerate(rule.values)}
            unseen = len(rule.values)
            X[:, f] = np.fromiter(
                (lookup.get(v, unseen) for v in col), dtype=np.int32, count=n
            )
        else:
            arr = np.asarray(col, dtype=np.float64)
            X[:, f] = np.searchsorted(np.asarray(rule.cuts), arr, side="left")
    return EncodedDataset(spec, y, matrix=X)


def encode_values(values: tuple, spec: EncoderSpec):
    """Encode a single record's feature values for prediction."""
    if spec.mode == TREE:
        return values
    if spec.mode == MLP:
        out = np.zeros(spec.width, dtype=np.float64)
        offset = 0
        for v, rule in zip(values, spec.rules):
            if isinstance(rule, OneHot):
                j = rule.index_of(v)
                if j < len(rule.values):
                    out[offset + j] = 1.0
            else:
                out[offset] = rule.scale(v)
            offset += rule.width
        return out
    return np.array(
        [rule.index_of(v) for v, rule in zip(values, spec.rules)], dtype=np.int32
    )


def decode_onehot(block: np.ndarray, rule: OneHot) -> str | None:
    """Recover the symbolic value from a one-hot block; None if all-zero."""
    hits = np.nonzero(block)[0]
    if len(hits) != 1:
        return None
    return rule.values[int(hits[0])]
