# app/labeling/weak_labels.py
"""Keyword rules over profile descriptions, the first (weak) labeling stage."""

import json
import logging
import re
from functools import cached_property
from pathlib import Path

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from app import constants
from app.errors import ConfigError, LabelError
from app.ml.preprocessing import normalize_keyword, prepare_profile
from app.models.labels import (
    ClassRegistry,
    LabeledUser,
    LabeledUserSet,
    Provenance,
    UserType,
)

log = logging.getLogger("labeling.weak_labels")

PROFILE_COLUMNS = ["user", "description"]

# alphanumerics only; "_" and "#" count as delimiters
_BOUNDARY_START = r"(?<![^\W_])"
_BOUNDARY_END = r"(?![^\W_])"


class KeywordRule(BaseModel):
    """Keyword lists per class, in class order.

    Keywords are stored case-folded and Unicode-normalized; a keyword may
    belong to one class only.
    """

    model_config = ConfigDict(frozen=True, ignored_types=(cached_property,))

    keywords: dict[str, list[str]]

    @field_validator("keywords")
    @classmethod
    def _normalize(cls, value: dict[str, list[str]]) -> dict[str, list[str]]:
        if len(value) < 2:
            raise ValueError("a keyword rule needs at least 2 classes")
        out: dict[str, list[str]] = {}
        owner: dict[str, str] = {}
        for name, words in value.items():
            kept = []
            for word in words:
                kw = normalize_keyword(word)
                if not kw or kw in kept:
                    continue
                if kw in owner:
                    raise ValueError(f"keyword {kw!r} listed for both {owner[kw]} and {name}")
                owner[kw] = name
                kept.append(kw)
            out[name] = kept
        return out

    @classmethod
    def default_us(cls) -> "KeywordRule":
        return cls(keywords=constants.DEFAULT_US_KEYWORDS)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "KeywordRule":
        """Rule file ``{class: [keywords]}``; key order is class order."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"keyword rule file not found: {path}")
        try:
            return cls(keywords=json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: malformed JSON: {e.msg}") from None
        except ValidationError as e:
            raise ConfigError(f"{path}: {e.errors()[0]['msg']}") from None

    @property
    def classes(self) -> ClassRegistry:
        return ClassRegistry(self.keywords)

    @cached_property
    def patterns(self) -> list[re.Pattern]:
        compiled = []
        for words in self.keywords.values():
            alternatives = "|".join(
                r"\s+".join(re.escape(part) for part in w.split(" "))
                for w in sorted(words, key=len, reverse=True)
            )
            compiled.append(
                re.compile(f"{_BOUNDARY_START}(?:{alternatives}){_BOUNDARY_END}")
                if alternatives
                else None
            )
        return compiled


def matching_classes(description: str, rule: KeywordRule) -> list[int]:
    text = prepare_profile(description or "")
    return [i for i, pat in enumerate(rule.patterns) if pat is not None and pat.search(text)]


def classify_profile(description: str, rule: KeywordRule) -> int | None:
    """Class index when keywords of exactly one class match, else ``None``."""
    hits = matching_classes(description, rule)
    return hits[0] if len(hits) == 1 else None


def read_profiles(path: str | Path) -> pd.DataFrame:
    """Profiles CSV ``user,description[,user_type]``; a 0-byte file is empty."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"profiles file not found: {path}")
    if path.stat().st_size == 0:
        return pd.DataFrame(columns=PROFILE_COLUMNS)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as e:
        raise LabelError(f"malformed profiles file {path}: {e}") from None
    missing = [c for c in PROFILE_COLUMNS if c not in df.columns]
    if missing:
        raise LabelError(f"profiles file {path} lacks column(s) {missing}")
    return df


def seed_from_frame(profiles: pd.DataFrame, rule: KeywordRule) -> LabeledUserSet:
    labeled = LabeledUserSet(rule.classes)
    has_type = "user_type" in profiles.columns
    unknown = 0
    for row_number, row in enumerate(profiles.itertuples(index=False), start=2):
        label = classify_profile(row.description, rule)
        if label is None:
            unknown += 1
            continue
        try:
            user_type = UserType(row.user_type) if has_type and row.user_type else UserType.PUBLIC
        except ValueError as e:
            raise LabelError(f"row {row_number}: {e}") from None
        labeled.add(
            row.user, LabeledUser(label=label, provenance=Provenance.WEAK, user_type=user_type)
        )
    log.info("Weak labels: %s, %d unknown", labeled.class_counts(), unknown)
    return labeled


def seed_from_profiles(path: str | Path, rule: KeywordRule | None = None) -> LabeledUserSet:
    """Weak seed labels from a Profiles CSV; unknown profiles are left out."""
    return seed_from_frame(read_profiles(path), rule or KeywordRule.default_us())
