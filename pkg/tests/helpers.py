# tests/helpers.py
"""Builders for small hand-checked graphs and label sets."""

import scipy.sparse as sp

from app.models.graph import GraphMode, SparseGraph
from app.models.interaction import InteractionRecord, SignalKind, UserRegistry
from app.models.labels import (
    ClassRegistry,
    LabeledUser,
    LabeledUserSet,
    Provenance,
    UserType,
)


def make_graph(
    users: list[str],
    edges: list[tuple[int, int, float]],
    *,
    directed: bool = True,
    mode: GraphMode = GraphMode.DIRECT,
    signal: str = "retweet",
) -> SparseGraph:
    """Graph from ``(target, source, weight)`` triples over ``users``."""
    n = len(users)
    if edges:
        rows, cols, vals = zip(*edges)
        m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    else:
        m = sp.csr_matrix((n, n))
    return SparseGraph(m, UserRegistry(users), signal, directed=directed, mode=mode)


def undirected(users: list[str], pairs: list[tuple[int, int]], weight: float = 1.0) -> SparseGraph:
    edges = []
    for i, j in pairs:
        edges += [(i, j, weight), (j, i, weight)]
    return make_graph(users, edges, directed=False, mode=GraphMode.SYMMETRIC)


def make_labels(
    pairs: dict[str, str],
    classes: tuple[str, ...] = ("D", "R"),
    provenance: Provenance = Provenance.MANUAL,
    types: dict[str, UserType] | None = None,
) -> LabeledUserSet:
    registry = ClassRegistry(classes)
    out = LabeledUserSet(registry)
    for uid, name in pairs.items():
        out.add(
            uid,
            LabeledUser(
                label=registry.index(name),
                provenance=provenance,
                user_type=(types or {}).get(uid, UserType.PUBLIC),
            ),
        )
    return out


def records(*triples, kind: SignalKind = SignalKind.RETWEET) -> list[InteractionRecord]:
    """Records from ``(source, target, weight)`` triples."""
    return [InteractionRecord(source=s, kind=kind, target=t, weight=w) for s, t, w in triples]
