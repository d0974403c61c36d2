# app/storage/files.py
"""Tabular file formats: Label CSV, Predictions CSV and Embedding TSV."""

import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from app import constants
from app.errors import ArtifactError, LabelError
from app.models.graph import EmbeddingMatrix
from app.models.interaction import UserRegistry
from app.models.labels import (
    ClassRegistry,
    LabelDistribution,
    LabeledUser,
    LabeledUserSet,
    Provenance,
    UserType,
)

log = logging.getLogger("storage.files")

LABEL_COLUMNS = ["user", "label", "provenance", "user_type"]
PREDICTION_COLUMNS = ["user", "predicted_label", "score", "abstained"]
_EMBEDDING_HEADER = re.compile(r"^#dim=(\d+)\s+signal=(\S*)\s*$")


def _read_csv(path: Path, what: str) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise LabelError(f"{what} file {path} is empty (missing header)") from None
    except pd.errors.ParserError as e:
        raise LabelError(f"malformed {what} file {path}: {e}") from None


def load_labels(
    path: str | Path,
    classes: ClassRegistry | None = None,
    *,
    registry: UserRegistry | None = None,
    register_unknown: bool = False,
) -> LabeledUserSet:
    """Load a Label CSV (``user,label,provenance,user_type``).

    Args:
        path: CSV path.
        classes: Class registry to validate against. When omitted the classes
            are inferred from the file, sorted by name.
        registry: When given, users must already be registered unless
            ``register_unknown`` is set, in which case they are added.
        register_unknown: Register users missing from ``registry``.

    Raises:
        LabelError: Unknown class, unknown user, bad enum value or a
            duplicate user with a conflicting label.
    """
    path = Path(path)
    df = _read_csv(path, "label")
    if list(df.columns) != LABEL_COLUMNS:
        raise LabelError(f"label file {path} must have header {','.join(LABEL_COLUMNS)}")
    if classes is None:
        classes = ClassRegistry(sorted(set(df["label"])))

    labeled = LabeledUserSet(classes)
    for row_number, row in enumerate(df.itertuples(index=False), start=2):
        if registry is not None and row.user not in registry:
            if not register_unknown:
                raise LabelError(f"row {row_number}: unknown user {row.user!r}")
            registry.add(row.user)
        try:
            entry = LabeledUser(
                label=classes.index(row.label),
                provenance=Provenance(row.provenance),
                user_type=UserType(row.user_type),
            )
        except ValueError as e:
            raise LabelError(f"row {row_number}: {e}") from None
        labeled.add(row.user, entry)
    log.info("Loaded %d labels over %d classes from %s", len(labeled), len(classes), path)
    return labeled


def save_labels(labeled: LabeledUserSet, path: str | Path) -> None:
    rows = [
        {
            "user": uid,
            "label": labeled.classes.name(entry.label),
            "provenance": entry.provenance.value,
            "user_type": entry.user_type.value,
        }
        for uid, entry in labeled.items()
    ]
    pd.DataFrame(rows, columns=LABEL_COLUMNS).to_csv(path, index=False)


def predictions_frame(dist: LabelDistribution, predicted: np.ndarray) -> pd.DataFrame:
    scores = dist.scores
    top = scores.max(axis=1) if scores.shape[1] else np.zeros(len(predicted))
    abstained = predicted == constants.ABSTAIN
    return pd.DataFrame(
        {
            "user": list(dist.users.ids),
            "predicted_label": [
                "" if a else dist.classes.name(int(p)) for p, a in zip(predicted, abstained)
            ],
            "score": [0.0 if a else float(s) for s, a in zip(top, abstained)],
            "abstained": abstained.astype(bool),
        },
        columns=PREDICTION_COLUMNS,
    )


def write_predictions(dist: LabelDistribution, predicted: np.ndarray, path: str | Path) -> None:
    predictions_frame(dist, predicted).to_csv(path, index=False)


def read_predictions(
    path: str | Path, classes: ClassRegistry
) -> tuple[UserRegistry, np.ndarray]:
    """Predicted class index per user (``ABSTAIN`` for abstentions)."""
    path = Path(path)
    df = _read_csv(path, "predictions")
    if list(df.columns) != PREDICTION_COLUMNS:
        raise LabelError(f"predictions file {path} must have header {','.join(PREDICTION_COLUMNS)}")
    users = UserRegistry(df["user"])
    predicted = np.array(
        [
            constants.ABSTAIN if a.lower() == "true" or not lbl else classes.index(lbl)
            for lbl, a in zip(df["predicted_label"], df["abstained"])
        ],
        dtype=np.int64,
    )
    return users, predicted


def write_embedding_tsv(embedding: EmbeddingMatrix, path: str | Path) -> None:
    """Embedding TSV: ``#dim=d signal=<name>`` header, then ``user<TAB>v0...``.

    Values are written with ``repr`` so a read-back is bit-exact.
    """
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"#dim={embedding.dim} signal={embedding.signal}\n")
        for uid, row in zip(embedding.users, embedding.vectors):
            fh.write(uid)
            for v in row:
                fh.write("\t")
                fh.write(repr(float(v)))
            fh.write("\n")


def read_embedding_tsv(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"embedding file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        match = _EMBEDDING_HEADER.match(header.rstrip("\n"))
        if not match:
            raise ArtifactError(f"{path}: expected header '#dim=<d> signal=<name>', got {header!r}")
        dim, signal = int(match.group(1)), match.group(2)
        try:
            df = pd.read_csv(
                fh,
                sep="\t",
                header=None,
                dtype={0: str},
                keep_default_na=False,
                na_filter=False,
                float_precision="round_trip",
            )
        except pd.errors.EmptyDataError:
            df = None
    if df is None or df.empty:
        return EmbeddingMatrix(UserRegistry(), np.zeros((0, dim)), signal)
    if df.shape[1] != dim + 1:
        raise ArtifactError(f"{path}: rows have {df.shape[1] - 1} values, header says dim={dim}")
    users = UserRegistry(df.iloc[:, 0])
    if len(users) != len(df):
        raise ArtifactError(f"{path}: duplicate user rows")
    return EmbeddingMatrix(users, df.iloc[:, 1:].to_numpy(dtype=np.float64), signal)
