"""Dataset curation: dedup, stratified sampling to target counts, holdout split.

The shipped default plan reproduces the curated training distribution of
148,753 records (28,500 normal, 118,920 DOS, ...) with a 60,000-record
holdout drawn from the leftover pool.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .ingest import DatasetSummary, record_key, summarize
from .rng import derive_seed
from .schema import KddRecord

# Default per-label sample targets for the curated training set.
DEFAULT_TARGETS: dict[str, int] = {
    "smurf": 85983,
    "neptune": 32827,
    "back": 70,
    "pod": 10,
    "teardrop": 30,
    "buffer_overflow": 10,
    "loadmodule": 2,
    "perl": 1,
    "rootkit": 5,
    "ftp_write": 2,
    "guess_passwd": 10,
    "imap": 4,
    "multihop": 2,
    "phf": 1,
    "spy": 1,
    "warezclient": 31,
    "warezmaster": 7,
    "ipsweep": 382,
    "nmap": 70,
    "portsweep": 318,
    "satan": 487,
    "normal": 28500,
}

DEFAULT_HOLDOUT_SIZE = 60000

TAKE_ALL = "take_all"
ERROR = "error"


class CurationError(ValueError):
    pass


class ShortfallError(CurationError):
    """Fewer records available than the plan demands."""


class InsufficientPool(CurationError):
    """The leftover pool cannot supply the requested holdout."""


@dataclass
class CurationPlan:
    """Per-label sample targets plus holdout size, seed, and shortfall policy."""

    per_label_targets: dict[str, int]
    holdout_size: int = DEFAULT_HOLDOUT_SIZE
    seed: int = 0
    shortfall_policy: str = TAKE_ALL

    def __post_init__(self):
        if any(t < 0 for t in self.per_label_targets.values()):
            raise CurationError("targets must be non-negative")
        if self.holdout_size < 0:
            raise CurationError("holdout_size must be non-negative")
        if self.shortfall_policy not in (TAKE_ALL, ERROR):
            raise CurationError(f"bad shortfall policy {self.shortfall_policy!r}")

    @classmethod
    def default(cls, seed: int = 0, holdout_size: int = DEFAULT_HOLDOUT_SIZE,
                shortfall_policy: str = TAKE_ALL) -> "CurationPlan":
        return cls(dict(DEFAULT_TARGETS), holdout_size, seed, shortfall_policy)

    def to_json(self) -> str:
        doc = {
            "per_label_targets": dict(sorted(self.per_label_targets.items())),
            "holdout_size": self.holdout_size,
            "seed": self.seed,
            "shortfall_policy": self.shortfall_policy,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CurationPlan":
        doc = json.loads(text)
        return cls(
            per_label_targets={str(k): int(v) for k, v in doc["per_label_targets"].items()},
            holdout_size=int(doc.get("holdout_size", DEFAULT_HOLDOUT_SIZE)),
            seed=int(doc.get("seed", 0)),
            shortfall_policy=doc.get("shortfall_policy", TAKE_ALL),
        )


@dataclass
class CuratedDataset:
    """Seeded stratified sample with full provenance."""

    records: list[KddRecord]
    plan: CurationPlan
    seed: int
    shortfalls: dict[str, tuple[int, int]]  # label -> (target, available)
    summary: DatasetSummary = field(default=None)

    def __post_init__(self):
        if self.summary is None:
            self.summary = summarize(self.records)


def deduplicate(records: list[KddRecord]) -> list[KddRecord]:
    """Drop exact duplicates (all 41 values + label), keeping first occurrences."""
    seen: set[str] = set()
    out: list[KddRecord] = []
    for record in records:
        key = record_key(record)
        if key not in seen:
            seen.add(key)
            out.append(record)
    return out


def stratified_sample(records: list[KddRecord], plan: CurationPlan) -> CuratedDataset:
    """Draw min(target, available) records per label, uniformly without
    replacement, then shuffle the union. Pure function of (records, plan).

    Labels present in the data but absent from the plan get target 0.
    """
    by_label: dict[str, list[int]] = {}
    for i, record in enumerate(records):
        by_label.setdefault(record.label, []).append(i)

    chosen: list[int] = []
    shortfalls: dict[str, tuple[int, int]] = {}
    for label in sorted(plan.per_label_targets):
        target = plan.per_label_targets[label]
        pool = by_label.get(label, [])
        available = len(pool)
        if available < target:
            if plan.shortfall_policy == ERROR:
                raise ShortfallError(
                    f"label {label!r}: {available} available < target {target}"
                )
            shortfalls[label] = (target, available)
        take = min(target, available)
        if take == available:
            picked = list(pool)
        else:
            rnd = random.Random(derive_seed(plan.seed, "sample", label))
            picked = [pool[j] for j in sorted(rnd.sample(range(available), take))]
        chosen.extend(picked)

    rnd = random.Random(derive_seed(plan.seed, "order"))
    rnd.shuffle(chosen)
    sampled = [records[i] for i in chosen]
    return CuratedDataset(sampled, plan, plan.seed, shortfalls)


def split_holdout(
    pool: list[KddRecord], n: int, seed: int
) -> tuple[list[KddRecord], list[KddRecord]]:
    """Split off n seeded-random records; the two sides are index-disjoint."""
    if n > len(pool):
        raise InsufficientPool(f"holdout of {n} from a pool of {len(pool)}")
    rnd = random.Random(derive_seed(seed, "holdout"))
    test_idx = rnd.sample(range(len(pool)), n)
    taken = set(test_idx)
    test = [pool[i] for i in test_idx]
    train = [pool[i] for i in range(len(pool)) if i not in taken]
    return train, test
