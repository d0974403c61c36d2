# app/ml/classifiers.py
"""Random forest and logistic classifiers over fused features."""

import logging
import math
from pathlib import Path
from typing import Annotated, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import Pipeline, make_pipeline
from sklearn.preprocessing import StandardScaler

from app.errors import ArtifactError, ClassifierError
from app.ml.fusion import FusedFeatures
from app.models.labels import ClassRegistry, LabelDistribution
from app.storage.artifacts import load_model, save_model

log = logging.getLogger("ml.classifiers")


class ForestConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_estimators: Annotated[int, Field(ge=1)] = 100
    max_depth: Optional[Annotated[int, Field(ge=1)]] = None
    min_samples_split: Annotated[int, Field(ge=2)] = 2
    bootstrap: bool = True
    criterion: Literal["gini", "entropy"] = "gini"
    seed: int = 0


class LogisticConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    l2: Annotated[float, Field(gt=0)] = 1e-4
    tol: Annotated[float, Field(gt=0)] = 1e-6
    max_iter: Annotated[int, Field(ge=1)] = 5000


def _check_training(features: np.ndarray, labels: np.ndarray, classes: ClassRegistry):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ClassifierError(
            f"features {features.shape} do not match {labels.shape[0]} labels"
        )
    if labels.size and (labels.min() < 0 or labels.max() >= len(classes)):
        raise ClassifierError("training labels outside the class registry")
    present = np.unique(labels)
    if len(present) < 2:
        raise ClassifierError(
            f"need at least 2 classes in the training labels, got {len(present)}"
        )
    priors = np.bincount(labels, minlength=len(classes)) / len(labels)
    return features, labels, priors


class FittedClassifier:
    """Trained estimator plus the class registry, priors and feature width."""

    kind = "classifier"

    def __init__(self, estimator, classes: ClassRegistry, priors: np.ndarray, n_features: int):
        self.estimator = estimator
        self.classes = classes
        self.priors = priors
        self.n_features = n_features

    def _raw_scores(self, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scores(self, features: np.ndarray, absent: np.ndarray | None = None) -> np.ndarray:
        """N x K class scores; rows flagged ``absent`` get the class priors."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.n_features:
            raise ClassifierError(
                f"model expects {self.n_features} features, got {features.shape}"
            )
        out = self._raw_scores(features) if len(features) else np.zeros((0, len(self.classes)))
        if absent is not None and absent.any():
            out[absent] = self.priors
        return out

    def predict(self, fused: FusedFeatures) -> LabelDistribution:
        return LabelDistribution(
            self.scores(fused.features, fused.absent), fused.users, self.classes
        )

    def _spread(self, proba: np.ndarray, trained: np.ndarray) -> np.ndarray:
        out = np.zeros((proba.shape[0], len(self.classes)))
        out[:, trained] = proba
        return out


class ForestModel(FittedClassifier):
    kind = "forest"

    def _raw_scores(self, features: np.ndarray) -> np.ndarray:
        forest = self.estimator
        trained = forest.classes_.astype(np.int64)
        votes = np.zeros((len(features), len(self.classes)))
        rows = np.arange(len(features))
        for tree in forest.estimators_:
            choice = np.argmax(tree.predict_proba(features), axis=1)
            np.add.at(votes, (rows, trained[choice]), 1.0)
        return votes / len(forest.estimators_)


class LogisticModel(FittedClassifier):
    kind = "logistic"

    def _raw_scores(self, features: np.ndarray) -> np.ndarray:
        proba = self.estimator.predict_proba(features)
        trained = self.estimator.classes_.astype(np.int64)
        return self._spread(proba, trained)


def features_per_split(n_features: int) -> int:
    return max(1, math.ceil(math.sqrt(n_features)))


def forest_train(
    features: np.ndarray,
    labels: np.ndarray,
    classes: ClassRegistry,
    config: ForestConfig | None = None,
    threads: int = 1,
) -> ForestModel:
    """Fit a random forest on ``features``.

    Rows are put in a canonical order before fitting, so the model does not
    depend on the order the training rows arrive in.

    Raises:
        ClassifierError: Fewer than two classes or mismatched shapes.
    """
    config = config or ForestConfig()
    features, labels, priors = _check_training(features, labels, classes)
    order = np.lexsort(np.vstack([labels[None, :], features.T[::-1]]))
    forest = RandomForestClassifier(
        n_estimators=config.n_estimators,
        criterion=config.criterion,
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
        max_features=features_per_split(features.shape[1]),
        bootstrap=config.bootstrap,
        random_state=config.seed,
        n_jobs=threads,
    )
    forest.fit(features[order], labels[order])
    log.info(
        "Trained forest: %d trees on %d rows x %d features",
        config.n_estimators,
        features.shape[0],
        features.shape[1],
    )
    return ForestModel(forest, classes, priors, features.shape[1])


def forest_predict(model: ForestModel, fused: FusedFeatures) -> LabelDistribution:
    """Per-class fraction of tree votes for every user in ``fused``."""
    return model.predict(fused)


def logistic_train(
    features: np.ndarray,
    labels: np.ndarray,
    classes: ClassRegistry,
    config: LogisticConfig | None = None,
) -> LogisticModel:
    """Multinomial logistic regression on standardized features."""
    config = config or LogisticConfig()
    features, labels, priors = _check_training(features, labels, classes)
    pipeline: Pipeline = make_pipeline(
        StandardScaler(),
        LogisticRegression(
            C=1.0 / (config.l2 * len(labels)),
            tol=config.tol,
            max_iter=config.max_iter,
        ),
    )
    pipeline.fit(features, labels)
    return LogisticModel(pipeline, classes, priors, features.shape[1])


def logistic_predict(model: LogisticModel, fused: FusedFeatures) -> LabelDistribution:
    return model.predict(fused)


def save_classifier(model: FittedClassifier, path: str | Path) -> None:
    save_model(
        model,
        path,
        {"kind": model.kind, "classes": list(model.classes.names), "n_features": model.n_features},
    )


def load_classifier(path: str | Path) -> FittedClassifier:
    model = load_model(path)
    if not isinstance(model, FittedClassifier):
        raise ArtifactError(f"{path} does not hold a classifier")
    return model
