import json
import random

import pytest

from app.errors import IngestError
from app.models.interaction import InteractionRecord, SignalKind
from app.models.store import RecordStore, merge_stores
from app.storage.records import (
    ingest_file,
    ingest_records,
    ingest_sharded,
    write_records_file,
)


def _line(source, kind, target, weight=1, **extra) -> str:
    return json.dumps({"source": source, "kind": kind, "target": target, "weight": weight, **extra})


FIXTURE = [
    _line("u1", "retweet", "u2"),
    _line("u1", "retweet", "u2", 2),
    _line("u2", "retweet", "u3"),
    _line("u3", "retweet", "u1"),
    _line("u1", "mention", "u3"),
    _line("u1", "mention", "u3"),
    _line("u2", "mention", "u1", 3),
    _line("u3", "mention", "u2"),
    _line("u3", "retweet", "u1", 4),
    _line("u2", "retweet", "u3"),
]


def test_duplicate_lines_merge_into_one_record():
    store, registry = ingest_records([_line("u1", "retweet", "u2")] * 2)
    assert len(store) == 1
    assert store.weight("u1", SignalKind.RETWEET, "u2") == 2
    assert registry.ids == ("u1", "u2")


def test_empty_input():
    store, registry = ingest_records([])
    assert len(store) == 0
    assert len(registry) == 0


def test_fixture_counts_match_hand_tally():
    store, registry = ingest_records(FIXTURE)
    assert len(registry) == 3
    assert store.kinds() == {SignalKind.RETWEET, SignalKind.MENTION}
    assert store.weight("u1", "retweet", "u2") == 3
    assert store.weight("u2", "retweet", "u3") == 2
    assert store.weight("u3", "retweet", "u1") == 5
    assert store.weight("u1", "mention", "u3") == 2
    assert store.weight("u2", "mention", "u1") == 3
    assert store.activity_counts(SignalKind.RETWEET) == {"u1": 3, "u2": 2, "u3": 5}
    assert store.activity_counts(SignalKind.MENTION) == {"u1": 2, "u2": 3, "u3": 1}


def test_blank_lines_are_skipped_but_counted():
    with pytest.raises(IngestError) as exc:
        ingest_records([_line("a", "retweet", "b"), "", "{bad json"])
    assert exc.value.line_number == 3
    assert "line 3" in str(exc.value)


def test_unknown_kind_names_the_line():
    with pytest.raises(IngestError, match="unknown kind 'poke'") as exc:
        ingest_records([_line("a", "retweet", "b"), _line("a", "poke", "b")])
    assert exc.value.line_number == 2


@pytest.mark.parametrize("weight", [0, -1])
def test_non_positive_weight_rejected(weight):
    with pytest.raises(IngestError, match="weight"):
        ingest_records([_line("a", "retweet", "b", weight)])


def test_hashtag_targets_are_namespaced_and_not_users():
    store, registry = ingest_records(
        [_line("u1", "hashtag", "maga"), _line("u1", "retweet", "maga")]
    )
    assert store.weight("u1", "hashtag", "tag:maga") == 1
    # a user called "maga" and the hashtag "maga" do not collide
    assert store.weight("u1", "retweet", "maga") == 1
    assert registry.ids == ("u1", "maga")


def test_unknown_fields_are_ignored_and_ts_kept():
    store, _ = ingest_records(
        [_line("a", "retweet", "b", ts=20, lang="en"), _line("a", "retweet", "b", ts=10)]
    )
    (rec,) = store.records()
    assert rec.timestamp == 10
    assert rec.weight == 2


def test_merge_is_independent_of_order_and_sharding():
    lines = FIXTURE * 3
    expected, expected_registry = ingest_records(lines)
    shuffled = lines[:]
    random.Random(0).shuffle(shuffled)
    assert ingest_records(shuffled)[0] == expected
    for shards in (1, 2, 3, 7, 50):
        store, registry = ingest_sharded(lines, shards=shards, threads=2)
        assert store == expected
        assert registry == expected_registry


def test_merge_stores_is_associative():
    a = RecordStore.from_records([InteractionRecord(source="x", kind="retweet", target="y")])
    b = RecordStore.from_records(
        [InteractionRecord(source="x", kind="retweet", target="y", weight=2)]
    )
    c = RecordStore.from_records([InteractionRecord(source="y", kind="quote", target="x")])
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert merge_stores([c, b, a]) == merge_stores([a, b, c])


def test_file_round_trip(tmp_path):
    src = tmp_path / "in.jsonl"
    src.write_text("\n".join(FIXTURE) + "\n")
    store, _ = ingest_file(src)
    out = tmp_path / "out.jsonl"
    assert write_records_file(store.records(), out) == len(store)
    again, _ = ingest_file(out, threads=2)
    assert again == store


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_file(tmp_path / "missing.jsonl")
