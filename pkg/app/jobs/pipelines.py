# app/jobs/pipelines.py
"""Prediction pipelines plugged into the experiment runner."""

import logging
from itertools import chain
from typing import Mapping, Sequence

import numpy as np

from app.errors import EvaluationError
from app.graphs.build import union_graphs
from app.jobs.experiment import Pipeline
from app.ml import gcn
from app.ml.classifiers import ForestConfig, forest_train
from app.ml.fusion import fuse
from app.models.graph import EmbeddingMatrix, SparseGraph
from app.models.interaction import UserRegistry
from app.models.labels import LabeledUserSet
from app.propagation.label_prop import PropagationConfig, predict, propagate

log = logging.getLogger("jobs.pipelines")

METHODS = ("label_propagation", "gcn_forest", "gcn_head", "embedding_forest")


def _in_graph(seeds: LabeledUserSet, users: UserRegistry) -> LabeledUserSet:
    return seeds.subset(u for u in seeds if u in users)


def label_propagation_pipeline(
    graphs: Sequence[SparseGraph], config: PropagationConfig | None = None
) -> Pipeline:
    """LP over the union of ``graphs`` (same user registry)."""
    graph = graphs[0] if len(graphs) == 1 else union_graphs(graphs)

    def run(train: LabeledUserSet) -> tuple[UserRegistry, np.ndarray]:
        result = propagate(graph, _in_graph(train, graph.users), config)
        return result.distribution.users, predict(result.distribution)

    return run


def _forest_over(
    embeddings: Sequence[EmbeddingMatrix],
    train: LabeledUserSet,
    forest_config: ForestConfig | None,
    threads: int,
) -> tuple[UserRegistry, np.ndarray]:
    registry = UserRegistry(chain.from_iterable(e.users for e in embeddings))
    fused = fuse(embeddings, registry)
    train_users = [u for u in train if u in registry]
    if not train_users:
        raise EvaluationError("no training user has an embedding")
    labels = np.array([train.label_of(u) for u in train_users], dtype=np.int64)
    model = forest_train(fused.rows(train_users), labels, train.classes, forest_config, threads)
    return registry, predict(model.predict(fused))


def gcn_forest_pipeline(
    graphs: Sequence[SparseGraph],
    gcn_config: gcn.GcnConfig | None = None,
    forest_config: ForestConfig | None = None,
    activity: Mapping[str, Mapping[str, int]] | None = None,
    threads: int = 1,
) -> Pipeline:
    """One GCN per signal, embeddings fused, random forest on top."""

    def run(train: LabeledUserSet) -> tuple[UserRegistry, np.ndarray]:
        embeddings = [
            gcn.train(
                g,
                _in_graph(train, g.users),
                gcn_config,
                (activity or {}).get(g.signal),
            ).embedding
            for g in graphs
        ]
        return _forest_over(embeddings, train, forest_config, threads)

    return run


def gcn_head_pipeline(
    graph: SparseGraph,
    gcn_config: gcn.GcnConfig | None = None,
    activity: Mapping[str, int] | None = None,
) -> Pipeline:
    """Predictions straight from the GCN classification head."""
    gcn_config = gcn_config or gcn.GcnConfig()
    if not gcn_config.supervised:
        raise EvaluationError("the GCN head pipeline needs supervised training")

    def run(train: LabeledUserSet) -> tuple[UserRegistry, np.ndarray]:
        result = gcn.train(graph, _in_graph(train, graph.users), gcn_config, activity)
        return result.head_distribution.users, predict(result.head_distribution)

    return run


def embedding_forest_pipeline(
    embeddings: Sequence[EmbeddingMatrix],
    forest_config: ForestConfig | None = None,
    threads: int = 1,
) -> Pipeline:
    """Random forest over fixed, imported embeddings."""

    def run(train: LabeledUserSet) -> tuple[UserRegistry, np.ndarray]:
        return _forest_over(embeddings, train, forest_config, threads)

    return run
