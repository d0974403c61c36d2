import numpy as np
import pytest
import scipy.sparse as sp

from app import constants
from app.errors import PropagationError
from app.models.graph import SparseGraph
from app.models.interaction import UserRegistry
from app.models.labels import ClassRegistry, LabelDistribution
from app.processing.metrics import evaluate
from app.propagation.label_prop import (
    PropagationConfig,
    PropagationGraphMode,
    majority_vote_oracle,
    predict,
    propagate,
)
from app.synth.sbm import SbmConfig, generate
from tests.helpers import make_graph, make_labels, undirected


def _dist(rows) -> LabelDistribution:
    rows = np.asarray(rows, dtype=float)
    return LabelDistribution(
        rows, UserRegistry(f"u{i}" for i in range(len(rows))), ClassRegistry(["D", "R"])
    )


def test_isolated_node_stays_empty():
    graph = undirected(["a", "b", "lonely"], [(0, 1)])
    result = propagate(graph, make_labels({"a": "D"}))
    lonely = graph.users.index("lonely")
    assert result.distribution.scores[lonely].sum() == 0
    assert predict(result.distribution)[lonely] == constants.ABSTAIN


def test_single_seeded_neighbour():
    graph = undirected(["u", "r"], [(0, 1)])
    result = propagate(graph, make_labels({"r": "R"}), PropagationConfig(iterations=1))
    assert predict(result.distribution)[0] == 1


def test_path_weights_give_two_to_one():
    graph = make_graph(
        ["a", "u", "b"],
        [(0, 1, 2.0), (1, 0, 2.0), (1, 2, 1.0), (2, 1, 1.0)],
        directed=False,
    )
    result = propagate(graph, make_labels({"a": "D", "b": "R"}), PropagationConfig(iterations=1))
    d, r = result.distribution.scores[1]
    assert predict(result.distribution)[1] == 0
    assert d == pytest.approx(2 * r)
    assert d == pytest.approx(0.5 * 2 / 3)


@pytest.mark.parametrize(
    "row,expected",
    [([0.0, 0.0], constants.ABSTAIN), ([0.3, 0.3], 0), ([0.2, 0.7], 1)],
)
def test_predict_rules(row, expected):
    assert predict(_dist([row]))[0] == expected


def test_predict_threshold():
    assert predict(_dist([[0.2, 0.1]]), abstain_threshold=0.2)[0] == constants.ABSTAIN
    assert predict(_dist([[0.3, 0.1]]), abstain_threshold=0.2)[0] == 0


def test_majority_vote_examples():
    # u has seeded neighbours with weights R:3 and D:1; z has none
    graph = make_graph(
        ["u", "r", "d", "z", "y"],
        [(0, 1, 3.0), (1, 0, 3.0), (0, 2, 1.0), (2, 0, 1.0), (3, 4, 1.0), (4, 3, 1.0)],
        directed=False,
    )
    out = majority_vote_oracle(graph, make_labels({"r": "R", "d": "D"}))
    assert out[0] == 1
    assert out[3] == constants.ABSTAIN
    assert out[1] == 1 and out[2] == 0


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_one_iteration_equals_majority_vote(rng, alpha):
    for _ in range(100):
        n = 40
        dense = rng.integers(0, 3, size=(n, n)) * (rng.random((n, n)) < 0.1)
        np.fill_diagonal(dense, 0)
        users = [f"u{i}" for i in range(n)]
        graph = SparseGraph(sp.csr_matrix(dense.astype(float)), UserRegistry(users), "rt", True)
        seeded = rng.choice(n, size=10, replace=False)
        seeds = make_labels({users[i]: ("D", "R")[int(rng.integers(2))] for i in seeded})
        for mode in PropagationGraphMode:
            config = PropagationConfig(iterations=1, alpha=alpha, graph_mode=mode)
            lp = predict(propagate(graph, seeds, config).distribution)
            np.testing.assert_array_equal(lp, majority_vote_oracle(graph, seeds, mode))


def test_seeds_are_clamped(path_graph):
    seeds = make_labels({"a": "D", "e": "R"})
    result = propagate(path_graph, seeds, PropagationConfig(iterations=5))
    np.testing.assert_array_equal(result.distribution.scores[0], [1.0, 0.0])
    np.testing.assert_array_equal(result.distribution.scores[4], [0.0, 1.0])


def test_rows_stay_in_unit_simplex(path_graph):
    result = propagate(
        path_graph, make_labels({"a": "D", "c": "R"}), PropagationConfig(iterations=7, alpha=0.9)
    )
    scores = result.distribution.scores
    assert scores.min() >= 0
    assert scores.sum(axis=1).max() <= 1 + 1e-12


def test_reach_is_monotone(path_graph):
    result = propagate(path_graph, make_labels({"a": "D"}), PropagationConfig(iterations=4))
    assert result.reached == [2, 3, 4, 5]
    assert all(a <= b for a, b in zip(result.reached, result.reached[1:]))


def test_scale_invariance(small_sbm):
    graph = small_sbm.graph
    scaled = SparseGraph(graph.matrix * 3.5, graph.users, graph.signal, True)
    a = propagate(graph, small_sbm.seeds).distribution.scores
    b = propagate(scaled, small_sbm.seeds).distribution.scores
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_empty_seed_set_rejected(path_graph):
    with pytest.raises(PropagationError, match="empty"):
        propagate(path_graph, make_labels({}))


def test_seed_outside_graph_rejected(path_graph):
    with pytest.raises(PropagationError, match="not in the graph"):
        propagate(path_graph, make_labels({"zz": "D"}))


def test_config_validation():
    with pytest.raises(ValueError):
        PropagationConfig(iterations=0)
    with pytest.raises(ValueError):
        PropagationConfig(alpha=0)


def test_small_sbm_is_separated(small_sbm):
    result = propagate(small_sbm.graph, small_sbm.seeds)
    report = evaluate(result.distribution.users, predict(result.distribution), small_sbm.gold)
    assert report.accuracy >= 0.9


@pytest.mark.slow
def test_large_sbm_accuracy(large_sbm):
    result = propagate(large_sbm.graph, large_sbm.seeds)
    report = evaluate(result.distribution.users, predict(result.distribution), large_sbm.gold)
    assert report.accuracy >= 0.95


@pytest.mark.slow
def test_standard_fixture_accuracy_across_seeds():
    passing = 0
    for seed in range(10):
        data = generate(SbmConfig(block_sizes=[1000, 1000], p_in=0.02, p_out=0.002, seed=seed))
        result = propagate(data.graph, data.seeds)
        held_out = data.gold.without(data.seeds.users)
        report = evaluate(result.distribution.users, predict(result.distribution), held_out)
        passing += report.accuracy >= 0.95
        assert result.runtime_s < 1.0
    assert passing >= 9
