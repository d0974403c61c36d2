# app/jobs/experiment.py
"""Repeated random-split experiments over a labeled pool."""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Annotated, Callable, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from app import constants
from app.errors import EvaluationError
from app.models.interaction import UserRegistry
from app.models.labels import LabeledUserSet, UserType
from app.processing.metrics import MetricsReport, align, compute_metrics, reach_coverage
from app.utils.utils import derive_seed

log = logging.getLogger("jobs.experiment")

RESULT_COLUMNS = [
    "method",
    "signal",
    "acc_mean",
    "acc_sd",
    "f1_macro",
    "f1_weighted",
    "coverage",
    "users_per_window",
    "runtime_s",
]

# a pipeline maps training seeds to a prediction for every user it can see
Pipeline = Callable[[LabeledUserSet], tuple[UserRegistry, np.ndarray]]


class UserSource(str, Enum):
    PUBLIC = "public"
    POLITICIANS = "politicians"
    BOTH = "both"

    @property
    def user_type(self) -> UserType | None:
        if self is UserSource.PUBLIC:
            return UserType.PUBLIC
        if self is UserSource.POLITICIANS:
            return UserType.POLITICIAN
        return None


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    test_fraction: Annotated[float, Field(gt=0, lt=1)] = constants.DEFAULT_TEST_FRACTION
    repetitions: Annotated[int, Field(ge=1)] = constants.DEFAULT_REPETITIONS
    seed_source: UserSource = UserSource.BOTH
    test_source: UserSource = UserSource.BOTH
    signals: list[str] = ["retweet"]
    method: str = "label_propagation"
    seed: int = 0
    exclude_abstain: bool = False


@dataclass
class RepetitionResult:
    repetition: int
    metrics: MetricsReport
    coverage: float
    runtime_s: float
    n_train: int
    test_users: list[str]


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    repetitions: list[RepetitionResult] = field(default_factory=list)

    def _values(self, attr: str) -> np.ndarray:
        return np.array([getattr(r.metrics, attr) for r in self.repetitions])

    @property
    def acc_mean(self) -> float:
        return float(self._values("accuracy").mean())

    @property
    def acc_sd(self) -> float:
        acc = self._values("accuracy")
        return float(acc.std(ddof=1)) if len(acc) > 1 else 0.0

    def summary(self, users_per_window: float | None = None) -> dict:
        return {
            "method": self.plan.method,
            "signal": "+".join(self.plan.signals),
            "acc_mean": self.acc_mean,
            "acc_sd": self.acc_sd,
            "f1_macro": float(self._values("f1_macro").mean()),
            "f1_weighted": float(self._values("f1_weighted").mean()),
            "coverage": float(np.mean([r.coverage for r in self.repetitions])),
            "users_per_window": users_per_window,
            "runtime_s": float(np.mean([r.runtime_s for r in self.repetitions])),
        }


def split(
    gold: LabeledUserSet, plan: ExperimentPlan, repetition: int
) -> tuple[LabeledUserSet, list[str]]:
    """(training seeds, test users) of one repetition.

    The test draw depends only on the master seed, the repetition and the
    test pool, so every method sees the same test users.

    Raises:
        EvaluationError: The pool is too small for a non-empty train and test split.
    """
    pool = sorted(gold.by_type(plan.test_source.user_type).users)
    n_test = int(round(plan.test_fraction * len(pool)))
    if n_test < 1 or len(gold) - n_test < 1:
        minimum = math.ceil(1 / plan.test_fraction) + 1
        raise EvaluationError(
            f"need at least {minimum} labeled users in the test pool, have {len(pool)}"
        )
    rng = np.random.default_rng(derive_seed(plan.seed, "split", repetition))
    test = sorted(rng.choice(pool, size=n_test, replace=False).tolist())
    train = gold.without(test).by_type(plan.seed_source.user_type)
    if len(train) == 0:
        raise EvaluationError(
            f"no {plan.seed_source.value} training users remain after holding out {n_test}"
        )
    return train, test


def _run_one(
    pipeline: Pipeline, gold: LabeledUserSet, plan: ExperimentPlan, repetition: int
) -> RepetitionResult:
    train, test = split(gold, plan, repetition)
    started = time.perf_counter()
    users, predicted = pipeline(train)
    runtime = time.perf_counter() - started
    test_gold = gold.subset(test)
    pred, truth = align(users, predicted, test_gold)
    metrics = compute_metrics(pred, truth, gold.classes, plan.exclude_abstain)
    log.debug("repetition %d: accuracy %.4f", repetition, metrics.accuracy)
    return RepetitionResult(repetition, metrics, reach_coverage(pred), runtime, len(train), test)


def run_experiment(
    plan: ExperimentPlan,
    pipeline: Pipeline,
    gold: LabeledUserSet,
    threads: int = 1,
) -> ExperimentResult:
    """Run ``plan.repetitions`` splits and collect per-repetition metrics.

    Repetitions run in parallel threads and are collected in repetition order.
    """
    runs = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_run_one)(pipeline, gold, plan, rep) for rep in range(plan.repetitions)
    )
    result = ExperimentResult(plan, list(runs))
    log.info(
        "%s on %s: accuracy %.4f +/- %.4f over %d repetitions",
        plan.method,
        "+".join(plan.signals),
        result.acc_mean,
        result.acc_sd,
        plan.repetitions,
    )
    return result


def write_results(rows: Sequence[dict], path: str | Path) -> None:
    pd.DataFrame(list(rows), columns=RESULT_COLUMNS).to_csv(path, index=False)
