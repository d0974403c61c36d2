import numpy as np
import pytest

from app.errors import SynthError
from app.graphs.build import build_direct
from app.models.interaction import SignalKind
from app.models.labels import Provenance, UserType
from app.storage.files import load_labels
from app.storage.records import ingest_file
from app.synth.sbm import SbmConfig, generate, multi_signal_generate, write_synthetic

SMALL = SbmConfig(block_sizes=[60, 60], p_in=0.2, p_out=0.01, seed=7)


def _blocks(data):
    return np.array([data.gold.label_of(u) for u in data.users])


def test_no_cross_block_edges_without_p_out():
    data = generate(SMALL.model_copy(update={"p_out": 0.0}))
    coo = data.graph.matrix.tocoo()
    blocks = _blocks(data)
    assert coo.nnz > 0
    assert np.all(blocks[coo.row] == blocks[coo.col])


def test_edge_count_is_within_three_sd_of_expectation():
    data = generate(SMALL)
    # each of the 120 rows draws 59 in-block and 60 cross-block candidates
    mean = 120 * (59 * 0.2 + 60 * 0.01)
    sd = np.sqrt(120 * (59 * 0.2 * 0.8 + 60 * 0.01 * 0.99))
    assert abs(data.graph.nnz - mean) <= 3 * sd


def test_generation_is_deterministic():
    a, b = generate(SMALL), generate(SMALL)
    assert a.graph.structurally_equal(b.graph)
    assert a.gold == b.gold
    assert a.seeds == b.seeds
    c = generate(SMALL.model_copy(update={"seed": 8}))
    assert not a.graph.structurally_equal(c.graph)


def test_graph_shape_and_weights():
    data = generate(SMALL)
    graph = data.graph
    assert graph.directed
    assert graph.signal == "retweet"
    assert graph.matrix.diagonal().sum() == 0
    assert graph.matrix.data.min() >= 1
    np.testing.assert_array_equal(graph.matrix.data, np.round(graph.matrix.data))
    assert list(data.users)[:2] == ["u0000", "u0001"]


def test_labels_follow_blocks():
    data = generate(SMALL)
    assert data.gold.class_counts() == {"c0": 60, "c1": 60}
    assert data.seeds.class_counts() == {"c0": 18, "c1": 18}
    assert all(data.seeds.label_of(u) == data.gold.label_of(u) for u in data.seeds)
    assert all(data.seeds.get(u).provenance == Provenance.WEAK for u in data.seeds)
    assert all(data.gold.get(u).provenance == Provenance.MANUAL for u in data.gold)


def test_politician_fraction_and_class_names():
    config = SMALL.model_copy(
        update={"politician_fraction": 0.1, "class_names": ["D", "R"]}
    )
    data = generate(config)
    politicians = data.gold.by_type(UserType.POLITICIAN)
    assert politicians.class_counts() == {"D": 6, "R": 6}
    assert data.gold.classes.names == ("D", "R")


def test_politician_density_adds_edges_around_politicians():
    base = SMALL.model_copy(update={"politician_fraction": 0.2})
    plain = generate(base)
    dense = generate(base.model_copy(update={"politician_density": 3.0}))
    assert dense.graph.nnz > plain.graph.nnz


@pytest.mark.parametrize(
    "update,match",
    [
        ({"p_in": 0.0, "p_out": 0.0}, "both 0"),
        ({"block_sizes": [1]}, "at least 2"),
        ({"class_names": ["only"]}, "class names"),
    ],
)
def test_invalid_configs(update, match):
    with pytest.raises(SynthError, match=match):
        generate(SMALL.model_copy(update=update))


def test_multi_signal_shares_nodes_and_labels():
    graphs, gold, seeds = multi_signal_generate(
        SMALL, {"retweet": (0.2, 0.01), SignalKind.FRIEND: (0.05, 0.05)}
    )
    assert sorted(graphs) == ["friend", "retweet"]
    assert graphs["retweet"].users == graphs["friend"].users
    assert not graphs["retweet"].structurally_equal(graphs["friend"])
    single = generate(SMALL)
    assert graphs["retweet"].structurally_equal(single.graph)
    assert gold == single.gold
    assert seeds == single.seeds
    with pytest.raises(SynthError):
        multi_signal_generate(SMALL, {})


def test_written_fixture_reads_back(tmp_path):
    data = generate(SMALL)
    paths = write_synthetic({"retweet": data.graph}, data.gold, data.seeds, tmp_path)

    assert {p.name for p in paths.values()} == {"interactions.jsonl", "gold.csv", "seeds.csv"}
    store, _ = ingest_file(paths["interactions"])
    rebuilt = build_direct(store, SignalKind.RETWEET, data.users)
    assert rebuilt.structurally_equal(data.graph)
    assert load_labels(paths["gold"], data.gold.classes) == data.gold
    assert load_labels(paths["seeds"], data.gold.classes) == data.seeds
