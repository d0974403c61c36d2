# app/storage/records.py
"""Interaction JSONL ingestion and canonical export."""

import json
import logging
from pathlib import Path
from typing import Iterable, TextIO

from joblib import Parallel, delayed
from pydantic import ValidationError

from app.errors import IngestError
from app.models.interaction import InteractionRecord, SignalKind, UserRegistry
from app.models.store import RecordStore, merge_stores

log = logging.getLogger("storage.records")

_VALID_KINDS = ", ".join(k.value for k in SignalKind)


def parse_record(line: str, line_number: int) -> InteractionRecord:
    try:
        return InteractionRecord.model_validate_json(line)
    except ValidationError as e:
        err = e.errors()[0]
        loc = ".".join(str(p) for p in err.get("loc", ()))
        if loc == "kind":
            raise IngestError(
                f"unknown kind {err.get('input')!r} (expected one of {_VALID_KINDS})",
                line_number,
            ) from None
        if err.get("type", "").startswith("json"):
            raise IngestError(f"malformed JSON: {err['msg']}", line_number) from None
        raise IngestError(f"invalid field {loc or '<root>'}: {err['msg']}", line_number) from None


def _parse_lines(numbered: list[tuple[int, str]]) -> list[InteractionRecord]:
    return [parse_record(line, n) for n, line in numbered]


def _numbered(lines: Iterable[str]) -> list[tuple[int, str]]:
    return [(n, line) for n, line in enumerate(lines, start=1) if line.strip()]


def _register(records: Iterable[InteractionRecord], registry: UserRegistry) -> None:
    for rec in records:
        registry.add(rec.source)
        if rec.kind.targets_users:
            registry.add(rec.target)


def ingest_records(
    lines: Iterable[str], registry: UserRegistry | None = None
) -> tuple[RecordStore, UserRegistry]:
    """Parse Interaction JSONL lines into a merged store and a user registry.

    Args:
        lines: JSONL lines; blank lines are skipped.
        registry: Optional registry to extend. Users are added in first-seen
            order (source, then user-typed target).

    Returns:
        tuple[RecordStore, UserRegistry]: The merged store and the registry.

    Raises:
        IngestError: On a malformed line or unknown kind, naming the line.
    """
    registry = registry if registry is not None else UserRegistry()
    records = _parse_lines(_numbered(lines))
    _register(records, registry)
    store = RecordStore.from_records(records)
    log.info("Ingested %d lines into %d records, %d users", len(records), len(store), len(registry))
    return store, registry


def ingest_sharded(
    lines: Iterable[str],
    shards: int = 4,
    threads: int = 1,
    registry: UserRegistry | None = None,
) -> tuple[RecordStore, UserRegistry]:
    """Parse contiguous shards in parallel and merge the partial stores.

    Registry order matches :func:`ingest_records` because registration runs
    over the shards in input order after parsing.
    """
    registry = registry if registry is not None else UserRegistry()
    numbered = _numbered(lines)
    shards = max(1, min(shards, len(numbered) or 1))
    size = -(-len(numbered) // shards) if numbered else 0
    chunks = [numbered[i : i + size] for i in range(0, len(numbered), size)] if size else []
    parsed = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_parse_lines)(chunk) for chunk in chunks
    )
    for part in parsed:
        _register(part, registry)
    store = merge_stores(RecordStore.from_records(part) for part in parsed)
    return store, registry


def ingest_file(
    path: str | Path, registry: UserRegistry | None = None, threads: int = 1
) -> tuple[RecordStore, UserRegistry]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"interaction file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        if threads > 1:
            return ingest_sharded(fh, shards=threads, threads=threads, registry=registry)
        return ingest_records(fh, registry)


def write_records(records: Iterable[InteractionRecord], out: TextIO) -> int:
    n = 0
    for rec in records:
        out.write(json.dumps(rec.to_json_dict(), ensure_ascii=False, sort_keys=True))
        out.write("\n")
        n += 1
    return n


def write_records_file(records: Iterable[InteractionRecord], path: str | Path) -> int:
    with Path(path).open("w", encoding="utf-8") as fh:
        return write_records(records, fh)
