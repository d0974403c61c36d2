# app/models/store.py
"""Immutable, order-independent store of merged interaction counts."""

from collections import defaultdict
from typing import Iterable, Mapping

from app.models.interaction import InteractionRecord, SignalKind

RecordKey = tuple[str, SignalKind, str]


def _sort_key(key: RecordKey) -> tuple[str, str, str]:
    source, kind, target = key
    return (source, kind.value, target)


class RecordStore:
    """Weights of (source, kind, target) triples, summed over duplicates.

    Merging is a commutative, associative weight sum (earliest timestamp
    kept), so the store does not depend on input order or shard boundaries.
    """

    def __init__(
        self,
        weights: Mapping[RecordKey, int] | None = None,
        timestamps: Mapping[RecordKey, int] | None = None,
    ):
        self._weights: dict[RecordKey, int] = dict(weights or {})
        self._timestamps: dict[RecordKey, int] = dict(timestamps or {})

    @classmethod
    def from_records(cls, records: Iterable[InteractionRecord]) -> "RecordStore":
        weights: dict[RecordKey, int] = defaultdict(int)
        timestamps: dict[RecordKey, int] = {}
        for rec in records:
            weights[rec.key] += rec.weight
            if rec.timestamp is not None:
                prev = timestamps.get(rec.key)
                timestamps[rec.key] = (
                    rec.timestamp if prev is None else min(prev, rec.timestamp)
                )
        return cls(weights, timestamps)

    def merge(self, other: "RecordStore") -> "RecordStore":
        weights = dict(self._weights)
        for key, w in other._weights.items():
            weights[key] = weights.get(key, 0) + w
        timestamps = dict(self._timestamps)
        for key, ts in other._timestamps.items():
            prev = timestamps.get(key)
            timestamps[key] = ts if prev is None else min(prev, ts)
        return RecordStore(weights, timestamps)

    def weight(self, source: str, kind: SignalKind, target: str) -> int:
        return self._weights.get((source, SignalKind(kind), target), 0)

    def records(self, kind: SignalKind | None = None) -> list[InteractionRecord]:
        """Merged records in canonical (source, kind, target) order."""
        keys = sorted(
            (k for k in self._weights if kind is None or k[1] == kind), key=_sort_key
        )
        return [
            InteractionRecord(
                source=s,
                kind=k,
                target=t,
                weight=self._weights[(s, k, t)],
                ts=self._timestamps.get((s, k, t)),
            )
            for s, k, t in keys
        ]

    def kinds(self) -> set[SignalKind]:
        return {k for _, k, _ in self._weights}

    def activity_counts(self, kind: SignalKind) -> dict[str, int]:
        """Raw event count of ``kind`` per acting user."""
        counts: dict[str, int] = defaultdict(int)
        for (source, k, _), w in self._weights.items():
            if k == kind:
                counts[source] += w
        return dict(counts)

    def users_with_kind(self, kind: SignalKind) -> set[str]:
        return {source for source, k, _ in self._weights if k == kind}

    def __len__(self) -> int:
        return len(self._weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordStore):
            return NotImplemented
        return self._weights == other._weights and self._timestamps == other._timestamps

    def __repr__(self) -> str:
        return f"RecordStore(n={len(self)})"


def merge_stores(stores: Iterable[RecordStore]) -> RecordStore:
    merged = RecordStore()
    for store in stores:
        merged = merged.merge(store)
    return merged
