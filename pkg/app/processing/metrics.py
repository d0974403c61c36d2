# app/processing/metrics.py
"""Accuracy / F1 / confusion, coverage and coarse class grouping."""

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from app import constants
from app.errors import EvaluationError
from app.models.interaction import SignalKind, UserRegistry
from app.models.labels import ClassRegistry, LabeledUser, LabeledUserSet
from app.models.store import RecordStore

log = logging.getLogger("processing.metrics")


@dataclass
class MetricsReport:
    accuracy: float
    f1_macro: float
    f1_weighted: float
    confusion: np.ndarray
    n: int
    n_abstained: int
    accuracy_answered: float
    classes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_macro": self.f1_macro,
            "f1_weighted": self.f1_weighted,
            "accuracy_answered": self.accuracy_answered,
            "n": self.n,
            "n_abstained": self.n_abstained,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
        }


def align(
    users: UserRegistry, predicted: np.ndarray, gold: LabeledUserSet
) -> tuple[np.ndarray, np.ndarray]:
    """(predicted, gold) arrays over the gold users; missing users abstain."""
    pred = np.array(
        [
            predicted[users.index(u)] if u in users else constants.ABSTAIN
            for u in gold.users
        ],
        dtype=np.int64,
    )
    truth = np.array([gold.label_of(u) for u in gold.users], dtype=np.int64)
    return pred, truth


def compute_metrics(
    predicted: np.ndarray,
    gold: np.ndarray,
    classes: ClassRegistry,
    exclude_abstain: bool = False,
) -> MetricsReport:
    """Metrics of ``predicted`` against ``gold`` (both class indices).

    Abstentions count as errors unless ``exclude_abstain`` drops them first.

    Raises:
        EvaluationError: Empty gold set or length mismatch.
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if gold.size == 0:
        raise EvaluationError("gold label set is empty")
    if predicted.shape != gold.shape:
        raise EvaluationError(f"{predicted.size} predictions for {gold.size} gold labels")

    abstained = predicted == constants.ABSTAIN
    n_abstained = int(abstained.sum())
    answered = ~abstained
    accuracy_answered = (
        float(np.mean(predicted[answered] == gold[answered])) if answered.any() else 0.0
    )
    if exclude_abstain:
        predicted, gold = predicted[answered], gold[answered]

    labels = list(range(len(classes)))
    if gold.size == 0:
        f1_macro = f1_weighted = accuracy = 0.0
        confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    else:
        accuracy = float(np.mean(predicted == gold))
        f1_macro = float(
            f1_score(gold, predicted, labels=labels, average="macro", zero_division=0)
        )
        f1_weighted = float(
            f1_score(gold, predicted, labels=labels, average="weighted", zero_division=0)
        )
        confusion = confusion_matrix(gold, predicted, labels=labels)
    return MetricsReport(
        accuracy=accuracy,
        f1_macro=f1_macro,
        f1_weighted=f1_weighted,
        confusion=confusion,
        n=int(gold.size),
        n_abstained=n_abstained,
        accuracy_answered=accuracy_answered,
        classes=classes.names,
    )


def evaluate(
    users: UserRegistry,
    predicted: np.ndarray,
    gold: LabeledUserSet,
    exclude_abstain: bool = False,
) -> MetricsReport:
    pred, truth = align(users, predicted, gold)
    return compute_metrics(pred, truth, gold.classes, exclude_abstain)


def coverage(
    users: Iterable[str], required: Iterable[SignalKind], store: RecordStore
) -> float:
    """Percentage of ``users`` with at least one record of every required kind."""
    users = list(users)
    required = [SignalKind(k) for k in required]
    if not required:
        return 100.0
    if not users:
        return 0.0
    having = [store.users_with_kind(k) for k in required]
    covered = sum(1 for u in users if all(u in h for h in having))
    return 100.0 * covered / len(users)


def reach_coverage(predicted: np.ndarray) -> float:
    """Percentage of nodes that did not abstain."""
    predicted = np.asarray(predicted)
    if predicted.size == 0:
        return 0.0
    return 100.0 * float(np.mean(predicted != constants.ABSTAIN))


def grouped_registry(classes: ClassRegistry, mapping: Mapping[str, str]) -> ClassRegistry:
    unmapped = [c for c in classes.names if c not in mapping]
    if unmapped:
        raise EvaluationError(f"grouping does not map class(es) {unmapped}")
    coarse: list[str] = []
    for name in classes.names:
        if mapping[name] not in coarse:
            coarse.append(mapping[name])
    return ClassRegistry(coarse)


def group_labels(
    labels: np.ndarray, classes: ClassRegistry, mapping: Mapping[str, str]
) -> tuple[np.ndarray, ClassRegistry]:
    """Map class indices onto coarse groups; abstentions stay abstentions.

    Coarse classes are ordered by first appearance along ``classes``.
    """
    coarse = grouped_registry(classes, mapping)
    lookup = np.array([coarse.index(mapping[name]) for name in classes.names], dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full_like(labels, constants.ABSTAIN)
    valid = labels != constants.ABSTAIN
    out[valid] = lookup[labels[valid]]
    return out, coarse


def group_labeled_set(labeled: LabeledUserSet, mapping: Mapping[str, str]) -> LabeledUserSet:
    coarse = grouped_registry(labeled.classes, mapping)
    return LabeledUserSet(
        coarse,
        {
            uid: LabeledUser(
                label=coarse.index(mapping[labeled.classes.name(e.label)]),
                provenance=e.provenance,
                user_type=e.user_type,
            )
            for uid, e in labeled.items()
        },
    )
