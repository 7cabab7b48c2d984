"""Streaming parser and tally for KDD Cup 99 record files.

Input is newline-delimited comma-separated text, 42 fields per line, the
last field being the attack label with an optional trailing period.
Gzip-compressed files are accepted transparently.
"""
from __future__ import annotations

import gzip
import io
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .schema import (
    AttackCategory,
    FeatureSchema,
    KddRecord,
    LabelError,
    label_to_category,
    normalize_label,
    SKIP_POLICY,
)


class ParseError(ValueError):
    """A record line violates the 42-field KDD format."""


class WrongFieldCount(ParseError):
    pass


class NonNumericContinuous(ParseError):
    pass


class EmptyField(ParseError):
    pass


@dataclass
class DatasetSummary:
    """Per-label and per-category tallies over a record stream.

    ``per_category`` covers only labels inside the taxonomy, so its total
    equals ``total`` exactly when every label maps to a category.
    """

    per_label: Counter = field(default_factory=Counter)
    per_category: Counter = field(default_factory=Counter)
    total: int = 0
    malformed: int = 0  # lines dropped under the skip policy

    def add(self, record: KddRecord) -> None:
        self.per_label[record.label] += 1
        cat = label_to_category(record.label, SKIP_POLICY)
        if cat is not None:
            self.per_category[cat] += 1
        self.total += 1

    @property
    def uncategorized(self) -> int:
        return self.total - sum(self.per_category.values())


def parse_record(line: str, schema: FeatureSchema) -> KddRecord:
    """Parse one comma-separated line into a validated KddRecord."""
    parts = line.rstrip("\r\n").split(",")
    if len(parts) != 42:
        raise WrongFieldCount(f"expected 42 fields, got {len(parts)}")
    if "" in parts:
        raise EmptyField(f"empty field at position {parts.index('') + 1}")
    try:
        label = normalize_label(parts[41])
    except LabelError as exc:
        raise ParseError(str(exc)) from exc
    values = parts[:41]
    for i in schema.continuous_positions:
        raw = values[i]
        try:
            v = float(raw)
        except ValueError:
            raise NonNumericContinuous(
                f"field {i + 1} ({schema.features[i].name}): {raw!r}"
            ) from None
        if not math.isfinite(v):
            raise NonNumericContinuous(
                f"field {i + 1} ({schema.features[i].name}): non-finite {raw!r}"
            )
        values[i] = v
    return KddRecord(tuple(values), label)


def serialize_record(record: KddRecord) -> str:
    """Render a record back to canonical 42-field text.

    Integer-valued continuous fields print bare (``0``, ``181``); everything
    else uses the shortest exact float repr. parse(serialize(r)) == r.
    """
    out = []
    for v in record.values:
        if isinstance(v, str):
            out.append(v)
        elif v.is_integer():
            out.append("%d" % v)
        else:
            out.append(repr(v))
    out.append(record.label + ".")
    return ",".join(out)


def record_key(record: KddRecord) -> str:
    """Canonical dedup key: equal keys iff all 41 values and the label are equal."""
    return serialize_record(record)


def open_text(source) -> IO[str]:
    """Open a path or binary/text stream as text, gunzipping when needed."""
    if isinstance(source, (str, os.PathLike)):
        raw: IO[bytes] = open(source, "rb")
    elif isinstance(source, io.TextIOBase):
        return source
    else:
        raw = source
    head = raw.read(2)
    raw.seek(0)
    if head == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8")
    return io.TextIOWrapper(raw, encoding="utf-8")


def load_dataset(
    source,
    schema: FeatureSchema,
    on_error: str = "abort",
) -> tuple[Iterator[KddRecord], DatasetSummary]:
    """Stream records out of a file, tallying a summary as lines are consumed.

    Memory stays bounded regardless of file size: only the summary state is
    retained. The returned summary is complete once the stream is exhausted.
    ``on_error`` is ``abort`` (raise with the line number) or ``skip``
    (drop the line and count it in ``summary.malformed``).
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    summary = DatasetSummary()

    def stream() -> Iterator[KddRecord]:
        with open_text(source) as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = parse_record(line, schema)
                except ParseError as exc:
                    if on_error == "skip":
                        summary.malformed += 1
                        continue
                    raise type(exc)(f"line {lineno}: {exc}") from None
                summary.add(record)
                yield record

    return stream(), summary


def summarize(records: Iterable[KddRecord]) -> DatasetSummary:
    """Exact per-label and per-category counts for a record stream."""
    summary = DatasetSummary()
    for record in records:
        summary.add(record)
    return summary


def summarize_file(
    source, schema: FeatureSchema, on_error: str = "abort"
) -> DatasetSummary:
    """Convenience: stream a whole file and return its completed summary."""
    stream, summary = load_dataset(source, schema, on_error=on_error)
    for _ in stream:
        pass
    return summary


def write_records(records: Iterable[KddRecord], path) -> int:
    """Write records as canonical 42-field text; returns the line count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(serialize_record(record))
            fh.write("\n")
            n += 1
    return n
