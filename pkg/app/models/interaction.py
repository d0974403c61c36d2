# app/models/interaction.py
"""Typed representations of observed interactions and the user id registry."""

from enum import Enum
from typing import Annotated, Any, Iterable, Iterator, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app import constants

PositiveCount = Annotated[int, Field(ge=1)]


class SignalKind(str, Enum):
    RETWEET = "retweet"
    MENTION = "mention"
    QUOTE = "quote"
    HASHTAG = "hashtag"
    LIKE = "like"
    FRIEND = "friend"
    FOLLOW = "follow"

    @property
    def targets_users(self) -> bool:
        return self not in (SignalKind.HASHTAG, SignalKind.LIKE)

    @property
    def target_namespace(self) -> str:
        """Prefix of non-user targets; empty for user-to-user kinds."""
        if self is SignalKind.HASHTAG:
            return constants.TAG_NAMESPACE
        if self is SignalKind.LIKE:
            return constants.TWEET_NAMESPACE
        return ""


class InteractionRecord(BaseModel):
    """One observed event: ``source`` acted on ``target`` ``weight`` times."""

    model_config = ConfigDict(extra="ignore", populate_by_name=True, frozen=True)

    source: Annotated[str, Field(min_length=1)]
    kind: SignalKind
    target: Annotated[str, Field(min_length=1)]
    weight: PositiveCount = 1
    timestamp: Optional[int] = Field(default=None, alias="ts")

    @model_validator(mode="before")
    @classmethod
    def _namespace_target(cls, data: Any):
        if not isinstance(data, dict):
            return data
        try:
            kind = SignalKind(data.get("kind"))
        except ValueError:
            return data  # field validation reports the unknown kind
        target = data.get("target")
        ns = kind.target_namespace
        if ns and isinstance(target, str) and target and not target.startswith(ns):
            data = {**data, "target": f"{ns}{target}"}
        return data

    @property
    def key(self) -> tuple[str, SignalKind, str]:
        return (self.source, self.kind, self.target)

    def to_json_dict(self) -> dict:
        dump = {
            "source": self.source,
            "kind": self.kind.value,
            "target": self.target,
            "weight": self.weight,
        }
        if self.timestamp is not None:
            dump["ts"] = self.timestamp
        return dump


class UserRegistry:
    """Bijection between external user ids and dense internal indices.

    Indices are handed out in first-seen order and are contiguous 0..N-1.
    """

    def __init__(self, ids: Iterable[str] = ()):
        self._ids: list[str] = []
        self._index: dict[str, int] = {}
        for uid in ids:
            self.add(uid)

    def add(self, uid: str) -> int:
        idx = self._index.get(uid)
        if idx is None:
            idx = len(self._ids)
            self._index[uid] = idx
            self._ids.append(uid)
        return idx

    def index(self, uid: str) -> int:
        try:
            return self._index[uid]
        except KeyError:
            raise KeyError(f"unknown user id: {uid!r}") from None

    def indices(self, uids: Iterable[str]) -> list[int]:
        return [self.index(u) for u in uids]

    def id_of(self, idx: int) -> str:
        return self._ids[idx]

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    def __contains__(self, uid: object) -> bool:
        return uid in self._index

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self) -> Iterator[str]:
        return iter(self._ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UserRegistry):
            return NotImplemented
        return self._ids == other._ids

    def __repr__(self) -> str:
        return f"UserRegistry(n={len(self)})"
