# app/models/labels.py
"""Class registries, labeled user sets and per-node label score matrices."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.errors import LabelError
from app.models.interaction import UserRegistry


class Provenance(str, Enum):
    MANUAL = "manual"
    WEAK = "weak"
    EXTERNAL = "external"


class UserType(str, Enum):
    PUBLIC = "public"
    POLITICIAN = "politician"


class ClassRegistry:
    """Ordered, unique class names; index i is class label i."""

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(names) < 2:
            raise LabelError(f"need at least 2 classes, got {len(names)}: {names}")
        if len(set(names)) != len(names):
            raise LabelError(f"class names must be unique: {names}")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LabelError(
                f"unknown class name {name!r}; known classes: {list(self._names)}"
            ) from None

    def name(self, idx: int) -> str:
        return self._names[idx]

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassRegistry):
            return NotImplemented
        return self._names == other._names

    def __repr__(self) -> str:
        return f"ClassRegistry({list(self._names)})"


class LabeledUser(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: int
    provenance: Provenance
    user_type: UserType = UserType.PUBLIC


class LabeledUserSet:
    """One label per user, with provenance and user type recorded."""

    def __init__(
        self,
        classes: ClassRegistry,
        entries: Mapping[str, LabeledUser] | None = None,
    ):
        self.classes = classes
        self._entries: dict[str, LabeledUser] = {}
        for uid, entry in (entries or {}).items():
            self.add(uid, entry)

    def add(self, uid: str, entry: LabeledUser) -> None:
        if not 0 <= entry.label < len(self.classes):
            raise LabelError(f"label index {entry.label} out of range for {uid!r}")
        existing = self._entries.get(uid)
        if existing is not None and existing.label != entry.label:
            raise LabelError(
                f"conflicting labels for user {uid!r}: "
                f"{self.classes.name(existing.label)} vs {self.classes.name(entry.label)}"
            )
        if existing is None:
            self._entries[uid] = entry

    def get(self, uid: str) -> LabeledUser | None:
        return self._entries.get(uid)

    def label_of(self, uid: str) -> int:
        return self._entries[uid].label

    def items(self) -> Iterator[tuple[str, LabeledUser]]:
        return iter(self._entries.items())

    @property
    def users(self) -> list[str]:
        return list(self._entries)

    def subset(self, users: Iterable[str]) -> "LabeledUserSet":
        keep = set(users)
        return LabeledUserSet(
            self.classes, {u: e for u, e in self._entries.items() if u in keep}
        )

    def without(self, users: Iterable[str]) -> "LabeledUserSet":
        drop = set(users)
        return LabeledUserSet(
            self.classes, {u: e for u, e in self._entries.items() if u not in drop}
        )

    def by_type(self, user_type: UserType | None) -> "LabeledUserSet":
        """Users of ``user_type``; ``None`` keeps everyone."""
        if user_type is None:
            return self
        return LabeledUserSet(
            self.classes,
            {u: e for u, e in self._entries.items() if e.user_type == user_type},
        )

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.classes.names}
        for entry in self._entries.values():
            counts[self.classes.name(entry.label)] += 1
        return counts

    def __contains__(self, uid: object) -> bool:
        return uid in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledUserSet):
            return NotImplemented
        return self.classes == other.classes and self._entries == other._entries

    def __repr__(self) -> str:
        return f"LabeledUserSet(n={len(self)}, classes={list(self.classes.names)})"


ROW_SUM_TOLERANCE = 1e-9


@dataclass(eq=False)
class LabelDistribution:
    """N x K class scores over the users of ``users``.

    Entries lie in [0, 1] and every row sums to at most 1; an all-zero row
    means no evidence reached that user.
    """

    scores: np.ndarray
    users: UserRegistry
    classes: ClassRegistry

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.users), len(self.classes)):
            raise LabelError(
                f"score matrix shape {scores.shape} does not match "
                f"{len(self.users)} users x {len(self.classes)} classes"
            )
        if scores.size:
            if scores.min() < -ROW_SUM_TOLERANCE or scores.max() > 1 + ROW_SUM_TOLERANCE:
                raise LabelError("label scores must lie in [0, 1]")
            if scores.sum(axis=1).max() > 1 + ROW_SUM_TOLERANCE:
                raise LabelError("label score rows must sum to at most 1")
        self.scores = scores
