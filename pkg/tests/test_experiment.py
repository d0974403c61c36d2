import numpy as np
import pandas as pd
import pytest

from app.errors import EvaluationError
from app.graphs.build import induced_subgraph
from app.jobs.experiment import (
    RESULT_COLUMNS,
    ExperimentPlan,
    UserSource,
    run_experiment,
    split,
    write_results,
)
from app.jobs.pipelines import (
    METHODS,
    embedding_forest_pipeline,
    gcn_forest_pipeline,
    gcn_head_pipeline,
    label_propagation_pipeline,
)
from app.ml.classifiers import ForestConfig
from app.ml.gcn import GcnConfig
from app.models.graph import EmbeddingMatrix
from app.models.interaction import UserRegistry
from app.models.labels import UserType
from app.processing.metrics import compute_metrics, group_labels
from app.synth.sbm import SbmConfig, generate
from tests.helpers import make_labels

FAST_GCN = GcnConfig(in_dim=16, hidden_dim=16, epochs=40, learning_rate=0.01, seed=3)
TYPED_SBM = SbmConfig(
    block_sizes=[150, 150],
    p_in=0.1,
    p_out=0.01,
    politician_fraction=0.2,
    politician_density=3.0,
    seed=5,
)


def _constant_pipeline(users):
    registry = UserRegistry(users)

    def run(train):
        return registry, np.zeros(len(registry), dtype=np.int64)

    return run


def _recording_pipeline(users, seen):
    registry = UserRegistry(users)

    def run(train):
        seen.append(train)
        return registry, np.zeros(len(registry), dtype=np.int64)

    return run


def test_single_repetition(small_sbm):
    plan = ExperimentPlan(repetitions=1)
    pipeline = label_propagation_pipeline([small_sbm.graph])
    result = run_experiment(plan, pipeline, small_sbm.gold)

    assert len(result.repetitions) == 1
    assert result.acc_sd == 0.0
    rep = result.repetitions[0]
    assert len(rep.test_users) == 48
    assert rep.n_train == 72
    assert result.acc_mean >= 0.9


def test_repetitions_vary_and_are_reproducible(small_sbm):
    plan = ExperimentPlan(repetitions=10, seed=4)
    pipeline = _constant_pipeline(small_sbm.users)

    first = run_experiment(plan, pipeline, small_sbm.gold)
    again = run_experiment(plan, pipeline, small_sbm.gold, threads=3)

    assert first.acc_sd > 0
    assert [r.metrics.accuracy for r in first.repetitions] == [
        r.metrics.accuracy for r in again.repetitions
    ]
    assert [r.test_users for r in first.repetitions] == [r.test_users for r in again.repetitions]


def test_every_method_sees_the_same_test_users(small_sbm):
    plan = ExperimentPlan(repetitions=3, seed=11)
    lp = run_experiment(plan, label_propagation_pipeline([small_sbm.graph]), small_sbm.gold)
    const = run_experiment(plan, _constant_pipeline(small_sbm.users), small_sbm.gold)
    assert [r.test_users for r in lp.repetitions] == [r.test_users for r in const.repetitions]


def test_train_and_test_never_overlap(small_sbm):
    plan = ExperimentPlan(repetitions=5, seed=2)
    for rep in range(plan.repetitions):
        train, test = split(small_sbm.gold, plan, rep)
        assert not set(train) & set(test)
        assert len(train) + len(test) == len(small_sbm.gold)


@pytest.mark.parametrize("n_users", [0, 1])
def test_too_small_pool(n_users):
    gold = make_labels({f"u{i}": "D" for i in range(n_users)})
    with pytest.raises(EvaluationError, match="need at least 4"):
        split(gold, ExperimentPlan(), 0)


def test_seed_and_test_sources():
    data = generate(
        SbmConfig(
            block_sizes=[50, 50], p_in=0.2, p_out=0.01, politician_fraction=0.2, seed=1
        )
    )
    plan = ExperimentPlan(
        repetitions=2, seed_source=UserSource.PUBLIC, test_source=UserSource.POLITICIANS
    )
    seen = []
    result = run_experiment(plan, _recording_pipeline(data.users, seen), data.gold)

    politicians = set(data.gold.by_type(UserType.POLITICIAN))
    for rep in result.repetitions:
        assert set(rep.test_users) <= politicians
        assert len(rep.test_users) == 8
    for train in seen:
        assert not set(train) & politicians


def test_politician_seeds_transfer_to_the_public():
    data = generate(TYPED_SBM)
    pipeline = label_propagation_pipeline([data.graph])
    from_politicians = ExperimentPlan(
        repetitions=3,
        seed_source=UserSource.POLITICIANS,
        test_source=UserSource.PUBLIC,
        exclude_abstain=True,
    )
    from_public = from_politicians.model_copy(update={"seed_source": UserSource.PUBLIC})

    transfer = run_experiment(from_politicians, pipeline, data.gold)
    baseline = run_experiment(from_public, pipeline, data.gold)

    assert transfer.acc_mean >= 0.9
    assert abs(transfer.acc_mean - baseline.acc_mean) <= 0.05


def test_unlabeled_politicians_do_not_hurt_public_accuracy():
    data = generate(TYPED_SBM)
    public = data.gold.by_type(UserType.PUBLIC)
    plan = ExperimentPlan(
        repetitions=5, seed_source=UserSource.PUBLIC, test_source=UserSource.PUBLIC, seed=8
    )

    with_politicians = run_experiment(plan, label_propagation_pipeline([data.graph]), data.gold)
    public_only = label_propagation_pipeline([induced_subgraph(data.graph, public.users)])
    without = run_experiment(plan, public_only, public)

    for a, b in zip(with_politicians.repetitions, without.repetitions):
        assert a.test_users == b.test_users
        assert a.metrics.accuracy >= b.metrics.accuracy - 0.01


def test_summary_and_results_csv(tmp_path, small_sbm):
    plan = ExperimentPlan(repetitions=2, signals=["retweet", "mention"])
    result = run_experiment(plan, _constant_pipeline(small_sbm.users), small_sbm.gold)
    row = result.summary(users_per_window=450.0)

    assert list(row) == RESULT_COLUMNS
    assert row["signal"] == "retweet+mention"
    assert row["coverage"] == 100.0

    path = tmp_path / "results.csv"
    write_results([row], path)
    df = pd.read_csv(path)
    assert list(df.columns) == RESULT_COLUMNS
    assert df.loc[0, "users_per_window"] == 450.0


def test_methods_are_listed():
    assert set(METHODS) == {"label_propagation", "gcn_forest", "gcn_head", "embedding_forest"}


def test_embedding_forest_pipeline(small_sbm, rng):
    blocks = np.array([small_sbm.gold.label_of(u) for u in small_sbm.users])
    vectors = np.eye(2)[blocks] + rng.normal(scale=0.1, size=(len(blocks), 2))
    embedding = EmbeddingMatrix(small_sbm.users, vectors, "retweet")
    pipeline = embedding_forest_pipeline([embedding], ForestConfig(n_estimators=20, seed=1))

    result = run_experiment(ExperimentPlan(repetitions=2), pipeline, small_sbm.gold)

    assert result.acc_mean >= 0.95


def test_gcn_pipelines_run_end_to_end(small_sbm):
    plan = ExperimentPlan(repetitions=1, seed=6)
    forest = gcn_forest_pipeline([small_sbm.graph], FAST_GCN, ForestConfig(n_estimators=20))
    head = gcn_head_pipeline(small_sbm.graph, FAST_GCN)

    for pipeline in (forest, head):
        result = run_experiment(plan, pipeline, small_sbm.gold)
        assert 0.0 <= result.acc_mean <= 1.0
        assert result.repetitions[0].coverage == 100.0


def test_gcn_head_needs_supervision(small_sbm):
    with pytest.raises(EvaluationError, match="supervised"):
        gcn_head_pipeline(small_sbm.graph, GcnConfig(supervised=False))


@pytest.mark.slow
def test_five_parties_grouped_into_two_blocs():
    names = ["GPC", "NDP", "LPC", "CPC", "PPC"]
    mapping = {"GPC": "L", "NDP": "L", "LPC": "L", "CPC": "R", "PPC": "R"}
    data = generate(
        SbmConfig(
            block_sizes=[500, 400, 900, 1000, 250],
            p_in=0.015,
            p_out=0.003,
            class_names=names,
            seed=21,
        )
    )
    plan = ExperimentPlan(repetitions=5, seed=21)
    result = run_experiment(plan, label_propagation_pipeline([data.graph]), data.gold)
    assert result.acc_mean >= 0.60

    gains = []
    for rep in result.repetitions:
        confusion = rep.metrics.confusion
        fine = np.repeat(np.arange(5), confusion.sum(axis=1))
        pred = np.concatenate([np.repeat(np.arange(5), row) for row in confusion])
        coarse_gold, coarse = group_labels(fine, data.gold.classes, mapping)
        coarse_pred, _ = group_labels(pred, data.gold.classes, mapping)
        grouped = compute_metrics(coarse_pred, coarse_gold, coarse)
        ungrouped = compute_metrics(pred, fine, data.gold.classes)
        assert grouped.accuracy >= ungrouped.accuracy
        gains.append(grouped.accuracy - ungrouped.accuracy)
    assert np.mean(gains) >= 0.05
