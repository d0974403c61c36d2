# app/graphs/build.py
"""Direct, bipartite, projected and union graphs, plus the activity filter."""

import logging
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp

from app import constants
from app.errors import GraphError
from app.models.graph import GraphMode, SparseGraph
from app.models.interaction import SignalKind, UserRegistry
from app.models.store import RecordStore

log = logging.getLogger("graphs.build")

DEFAULT_BLOCK_ROWS = 4096


def build_direct(
    store: RecordStore,
    kind: SignalKind,
    registry: UserRegistry,
    *,
    binary: bool = False,
) -> SparseGraph:
    """User-to-user graph of one signal with ``A[target, source] = count``.

    Self-edges are dropped. ``binary`` clips counts to 1.

    Raises:
        GraphError: For hashtag/like kinds, which need :func:`build_bipartite`.
    """
    kind = SignalKind(kind)
    if not kind.targets_users:
        raise GraphError(
            f"{kind.value} targets are not users; build it with build_bipartite "
            "(bipartite mode) and project it"
        )
    rows, cols, vals = [], [], []
    for rec in store.records(kind):
        if rec.source == rec.target:
            continue
        rows.append(registry.index(rec.target))
        cols.append(registry.index(rec.source))
        vals.append(1.0 if binary else float(rec.weight))
    n = len(registry)
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    graph = SparseGraph(matrix, registry, kind.value, directed=True, mode=GraphMode.DIRECT)
    log.info("Built direct %s graph: %d nodes, %d edges", kind.value, graph.n, graph.nnz)
    return graph


def build_bipartite(
    store: RecordStore,
    kind: SignalKind,
    registry: UserRegistry,
    *,
    binary: bool = False,
) -> SparseGraph:
    """Target x user incidence graph (``A[target, user] = count``).

    Target rows are ordered by target id so the result does not depend on
    input order.
    """
    kind = SignalKind(kind)
    records = store.records(kind)
    targets = UserRegistry(sorted({rec.target for rec in records}))
    rows = [targets.index(rec.target) for rec in records]
    cols = [registry.index(rec.source) for rec in records]
    vals = [1.0 if binary else float(rec.weight) for rec in records]
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(len(targets), len(registry)))
    graph = SparseGraph(
        matrix, registry, kind.value, directed=True, mode=GraphMode.BIPARTITE, targets=targets
    )
    log.info(
        "Built bipartite %s graph: %d users, %d targets, %d edges",
        kind.value,
        graph.n,
        len(targets),
        graph.nnz,
    )
    return graph


def _drop_diagonal(m: sp.csr_matrix) -> sp.csr_matrix:
    coo = m.tocoo()
    keep = coo.row != coo.col
    return sp.csr_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=m.shape)


def project(direct: SparseGraph, *, block_rows: int = DEFAULT_BLOCK_ROWS) -> SparseGraph:
    """Co-activity graph ``A' = A^T A`` with the diagonal removed.

    Computed sparsely in blocks of output rows that are stacked in index
    order; a dense N x N matrix is never formed.
    """
    a = direct.matrix
    at = a.T.tocsr()
    n = direct.n
    blocks = []
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        try:
            blocks.append(at[start:stop] @ a)
        except MemoryError:
            raise GraphError(
                f"out of memory projecting {direct.signal!r} at output row {start} of {n}"
            ) from None
    product = sp.vstack(blocks, format="csr") if blocks else sp.csr_matrix((n, n))
    product = _drop_diagonal(product)
    # entries are exact for integer weights; averaging only removes rounding asymmetry
    product = (product + product.T) * 0.5
    graph = SparseGraph(
        product, direct.users, direct.signal, directed=False, mode=GraphMode.PROJECTED
    )
    log.info("Projected %s graph: %d nodes, %d edges", direct.signal, graph.n, graph.nnz)
    return graph


def symmetrize(graph: SparseGraph) -> SparseGraph:
    """``W + W^T`` as an undirected graph."""
    if not graph.is_square:
        raise GraphError("cannot symmetrize a bipartite graph; project it instead")
    w = graph.matrix
    return SparseGraph(
        w + w.T, graph.users, graph.signal, directed=False, mode=GraphMode.SYMMETRIC
    )


def undirected_view(graph: SparseGraph, *, projected: bool) -> SparseGraph:
    """Undirected graph for the propagation and GCN stages.

    ``projected`` co-activity graphs are computed unless the input already
    is one; otherwise direct graphs are symmetrized.
    """
    if projected:
        return graph if graph.mode is GraphMode.PROJECTED else project(graph)
    if graph.mode is GraphMode.BIPARTITE:
        raise GraphError(f"{graph.signal!r} is bipartite; project it first")
    return symmetrize(graph) if graph.directed else graph


def union_graphs(graphs: Sequence[SparseGraph], signal: str | None = None) -> SparseGraph:
    """Edgewise weight sum of graphs over the same node registry.

    The composite signal tag joins the inputs with ``+`` (e.g.
    ``retweet+mention``).
    """
    if not graphs:
        raise GraphError("union needs at least one graph")
    first = graphs[0]
    for g in graphs[1:]:
        if g.matrix.shape != first.matrix.shape:
            raise GraphError(
                f"cannot union graphs of shape {first.matrix.shape} and {g.matrix.shape}"
            )
        if g.users != first.users or g.targets != first.targets:
            raise GraphError("cannot union graphs over different node registries")
    total = first.matrix.copy()
    for g in graphs[1:]:
        total = total + g.matrix
    modes = {g.mode for g in graphs}
    mode = modes.pop() if len(modes) == 1 else GraphMode.DIRECT
    return SparseGraph(
        total,
        first.users,
        signal or "+".join(g.signal for g in graphs),
        directed=any(g.directed for g in graphs),
        mode=mode,
        targets=first.targets,
    )


def row_normalize(graph: SparseGraph) -> SparseGraph:
    """``D^-1 W``; rows with zero degree stay empty."""
    deg = graph.degrees()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return SparseGraph(
        sp.diags(inv) @ graph.matrix,
        graph.users,
        graph.signal,
        directed=True,
        mode=graph.mode,
        targets=graph.targets,
    )


def binarize(graph: SparseGraph) -> SparseGraph:
    m = graph.matrix.copy()
    m.data[:] = 1.0
    return SparseGraph(m, graph.users, graph.signal, graph.directed, graph.mode, graph.targets)


def induced_subgraph(graph: SparseGraph, users: Iterable[str]) -> SparseGraph:
    """Graph restricted to ``users`` (kept in the original index order)."""
    if not graph.is_square:
        raise GraphError("induced subgraphs are defined on square graphs only")
    keep = set(users)
    idx = [i for i, uid in enumerate(graph.users) if uid in keep]
    sub = graph.matrix[idx][:, idx]
    return SparseGraph(
        sub,
        UserRegistry(graph.users.id_of(i) for i in idx),
        graph.signal,
        graph.directed,
        graph.mode,
    )


def activity_from_graph(graph: SparseGraph) -> dict[str, int]:
    """Raw out-activity per user: column sums of the direct/bipartite matrix."""
    col_sums = np.asarray(graph.matrix.sum(axis=0)).ravel()
    return {uid: int(round(c)) for uid, c in zip(graph.users, col_sums) if c > 0}


def top_active_from_counts(
    counts: Mapping[str, int],
    registry: UserRegistry,
    fraction: float = constants.DEFAULT_ACTIVE_FRACTION,
) -> list[str]:
    """Top ``ceil(fraction * M)`` of the M active users by count.

    Ties are broken by internal index, lower index first.
    """
    if not 0 < fraction <= 1:
        raise GraphError(f"fraction must lie in (0, 1], got {fraction}")
    active = [(uid, c) for uid, c in counts.items() if c > 0]
    ranked = sorted(active, key=lambda item: (-item[1], registry.index(item[0])))
    take = math.ceil(round(fraction * len(ranked), 9))
    return [uid for uid, _ in ranked[:take]]


def filter_top_active(
    store: RecordStore,
    kind: SignalKind,
    registry: UserRegistry,
    fraction: float = constants.DEFAULT_ACTIVE_FRACTION,
) -> list[str]:
    """Most active users of ``kind`` by raw count (training-set filter)."""
    return top_active_from_counts(store.activity_counts(SignalKind(kind)), registry, fraction)


def export_edge_list(graph: SparseGraph, path: str | Path) -> int:
    """Write ``src<TAB>dst<TAB>weight`` rows with external ids.

    Directed graphs list actor -> target; undirected graphs list each pair
    once with ``src`` before ``dst`` in index order.
    """
    coo = graph.matrix.tocoo()
    rows_space = graph.targets if graph.targets is not None else graph.users
    if graph.directed:
        src = [graph.users.id_of(int(c)) for c in coo.col]
        dst = [rows_space.id_of(int(r)) for r in coo.row]
        weights = coo.data
    else:
        upper = coo.row < coo.col
        src = [graph.users.id_of(int(r)) for r in coo.row[upper]]
        dst = [graph.users.id_of(int(c)) for c in coo.col[upper]]
        weights = coo.data[upper]
    frame = pd.DataFrame({"src": src, "dst": dst, "weight": weights})
    frame.to_csv(path, sep="\t", header=False, index=False)
    return len(frame)
