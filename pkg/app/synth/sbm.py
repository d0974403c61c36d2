# app/synth/sbm.py
"""Stochastic block model fixtures with gold labels, seeds and user types."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Mapping, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from app.errors import SynthError
from app.models.graph import GraphMode, SparseGraph
from app.models.interaction import InteractionRecord, SignalKind, UserRegistry
from app.models.labels import (
    ClassRegistry,
    LabeledUser,
    LabeledUserSet,
    Provenance,
    UserType,
)
from app.storage.files import save_labels
from app.storage.records import write_records_file
from app.utils.utils import derive_seed

log = logging.getLogger("synth.sbm")

Probability = Annotated[float, Field(ge=0, le=1)]


class SbmConfig(BaseModel):
    """Block sizes, edge probabilities and labeling knobs of one fixture."""

    model_config = ConfigDict(extra="forbid")

    block_sizes: list[Annotated[int, Field(ge=1)]] = [1000, 1000]
    p_in: Probability = 0.02
    p_out: Probability = 0.002
    weight_mean: Annotated[float, Field(ge=1)] = 2.0
    politician_fraction: Probability = 0.0
    politician_density: Annotated[float, Field(ge=0)] = 1.0
    seed_fraction: Probability = 0.3
    seed: int = 0
    class_names: Optional[list[str]] = None
    kind: SignalKind = SignalKind.RETWEET


@dataclass
class SyntheticData:
    graph: SparseGraph
    gold: LabeledUserSet
    seeds: LabeledUserSet

    @property
    def users(self) -> UserRegistry:
        return self.graph.users


def _validate(config: SbmConfig) -> ClassRegistry:
    if sum(config.block_sizes) < 2:
        raise SynthError("block sizes must add up to at least 2 users")
    if config.p_in == 0 and config.p_out == 0:
        raise SynthError("p_in and p_out are both 0; the graph would have no edges")
    names = config.class_names or [f"c{i}" for i in range(len(config.block_sizes))]
    if len(names) != len(config.block_sizes):
        raise SynthError(f"{len(names)} class names for {len(config.block_sizes)} blocks")
    return ClassRegistry(names)


def _user_ids(n: int) -> list[str]:
    width = max(4, len(str(n - 1)))
    return [f"u{i:0{width}d}" for i in range(n)]


def _assign_types(config: SbmConfig, blocks: np.ndarray) -> np.ndarray:
    """Boolean politician flag, ``politician_fraction`` of every block."""
    rng = np.random.default_rng(derive_seed(config.seed, "types"))
    politician = np.zeros(len(blocks), dtype=bool)
    for b in range(len(config.block_sizes)):
        members = np.flatnonzero(blocks == b)
        take = int(round(config.politician_fraction * len(members)))
        if take:
            politician[rng.choice(members, size=take, replace=False)] = True
    return politician


def _sample_edges(
    config: SbmConfig, blocks: np.ndarray, politician: np.ndarray, stream: str
) -> sp.csr_matrix:
    """``A[i, j] = w`` for sampled (target i, actor j), one random stream per row."""
    n = len(blocks)
    rows, cols, vals = [], [], []
    geometric_p = 1.0 / config.weight_mean
    for i in range(n):
        rng = np.random.default_rng(derive_seed(config.seed, stream, i))
        p = np.where(blocks == blocks[i], config.p_in, config.p_out)
        if config.politician_density != 1.0:
            boost = politician | politician[i]
            p = np.where(boost, np.minimum(1.0, p * config.politician_density), p)
        hit = rng.random(n) < p
        hit[i] = False
        js = np.flatnonzero(hit)
        if js.size:
            rows.append(np.full(js.size, i))
            cols.append(js)
            vals.append(rng.geometric(geometric_p, size=js.size).astype(np.float64))
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _labels(
    config: SbmConfig,
    classes: ClassRegistry,
    users: list[str],
    blocks: np.ndarray,
    politician: np.ndarray,
) -> tuple[LabeledUserSet, LabeledUserSet]:
    def user_type(i: int) -> UserType:
        return UserType.POLITICIAN if politician[i] else UserType.PUBLIC

    gold = LabeledUserSet(classes)
    for i, uid in enumerate(users):
        gold.add(
            uid,
            LabeledUser(label=int(blocks[i]), provenance=Provenance.MANUAL, user_type=user_type(i)),
        )
    rng = np.random.default_rng(derive_seed(config.seed, "seeds"))
    seeds = LabeledUserSet(classes)
    for b in range(len(config.block_sizes)):
        members = np.flatnonzero(blocks == b)
        take = min(len(members), max(1, int(round(config.seed_fraction * len(members)))))
        for i in sorted(rng.choice(members, size=take, replace=False)):
            seeds.add(
                users[i],
                LabeledUser(label=b, provenance=Provenance.WEAK, user_type=user_type(i)),
            )
    return gold, seeds


def _layout(config: SbmConfig):
    classes = _validate(config)
    blocks = np.repeat(np.arange(len(config.block_sizes)), config.block_sizes)
    users = _user_ids(len(blocks))
    politician = _assign_types(config, blocks)
    return classes, blocks, users, politician


def generate(config: SbmConfig | None = None) -> SyntheticData:
    """Directed SBM graph with gold labels (manual) and seed labels (weak).

    Every row of the adjacency draws from its own random stream keyed by the
    config seed, so the graph is reproducible row by row.

    Raises:
        SynthError: Fewer than 2 users, ``p_in = p_out = 0`` or class names
            that do not match the blocks.
    """
    config = config or SbmConfig()
    classes, blocks, users, politician = _layout(config)
    matrix = _sample_edges(config, blocks, politician, f"edges:{config.kind.value}")
    graph = SparseGraph(
        matrix, UserRegistry(users), config.kind.value, directed=True, mode=GraphMode.DIRECT
    )
    gold, seeds = _labels(config, classes, users, blocks, politician)
    log.info(
        "Generated SBM: %d users in %d blocks, %d edges, %d seeds",
        graph.n,
        len(classes),
        graph.nnz,
        len(seeds),
    )
    return SyntheticData(graph, gold, seeds)


def multi_signal_generate(
    config: SbmConfig, signals: Mapping[SignalKind | str, tuple[float, float]]
) -> tuple[dict[str, SparseGraph], LabeledUserSet, LabeledUserSet]:
    """Independent SBM draws per signal over one node set and one labeling.

    ``signals`` maps a signal kind to its ``(p_in, p_out)``.
    """
    if not signals:
        raise SynthError("no signals requested")
    classes, blocks, users, politician = _layout(config)
    registry = UserRegistry(users)
    graphs = {}
    for kind, (p_in, p_out) in signals.items():
        kind = SignalKind(kind)
        signal_config = config.model_copy(update={"p_in": p_in, "p_out": p_out, "kind": kind})
        _validate(signal_config)
        matrix = _sample_edges(signal_config, blocks, politician, f"edges:{kind.value}")
        graphs[kind.value] = SparseGraph(
            matrix, registry, kind.value, directed=True, mode=GraphMode.DIRECT
        )
    gold, seeds = _labels(config, classes, users, blocks, politician)
    return graphs, gold, seeds


def graph_records(graph: SparseGraph) -> list[InteractionRecord]:
    """Interaction records of a direct graph (actor = column, target = row)."""
    kind = SignalKind(graph.signal)
    coo = graph.matrix.tocoo()
    return [
        InteractionRecord(
            source=graph.users.id_of(int(c)),
            kind=kind,
            target=graph.users.id_of(int(r)),
            weight=int(w),
        )
        for r, c, w in zip(coo.row, coo.col, coo.data)
    ]


def write_synthetic(
    graphs: Mapping[str, SparseGraph],
    gold: LabeledUserSet,
    seeds: LabeledUserSet,
    out_dir: str | Path,
) -> dict[str, Path]:
    """Write ``interactions.jsonl``, ``gold.csv`` and ``seeds.csv`` into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "interactions": out_dir / "interactions.jsonl",
        "gold": out_dir / "gold.csv",
        "seeds": out_dir / "seeds.csv",
    }
    records = [rec for signal in sorted(graphs) for rec in graph_records(graphs[signal])]
    records.sort(key=lambda r: (r.source, r.kind.value, r.target))
    n = write_records_file(records, paths["interactions"])
    save_labels(gold, paths["gold"])
    save_labels(seeds, paths["seeds"])
    log.info("Wrote %d interaction records and %d gold labels to %s", n, len(gold), out_dir)
    return paths
