# app/ml/gcn.py
"""Graph convolutional encoder trained on link prediction and seed labels.

One embedding matrix is produced per signal. Input features are trainable
and drawn per user id, so the result does not depend on node index order.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Annotated, Callable, Literal, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp
import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field
from torch import nn

from app import constants
from app.errors import GraphError, TrainingError
from app.graphs.build import activity_from_graph, top_active_from_counts, undirected_view
from app.models.graph import EmbeddingMatrix, SparseGraph
from app.models.interaction import UserRegistry
from app.models.labels import LabelDistribution, LabeledUserSet
from app.utils.utils import derive_seed, stable_hash

log = logging.getLogger("ml.gcn")

TRAINING_LOG_COLUMNS = ["epoch", "loss_link", "loss_cls"]


class GcnGraphMode(str, Enum):
    DIRECT = "direct"
    PROJECTED = "projected"


class GcnConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_dim: Annotated[int, Field(ge=1)] = constants.DEFAULT_HIDDEN_DIM
    hidden_dim: Annotated[int, Field(ge=1)] = constants.DEFAULT_HIDDEN_DIM
    layers: Literal[1, 2] = 1
    epochs: Annotated[int, Field(ge=0)] = constants.DEFAULT_GCN_EPOCHS
    learning_rate: Annotated[float, Field(gt=0)] = constants.DEFAULT_GCN_LR
    beta1: Annotated[float, Field(ge=0, lt=1)] = 0.9
    beta2: Annotated[float, Field(ge=0, lt=1)] = 0.999
    eps: Annotated[float, Field(gt=0)] = 1e-8
    neg_samples_per_edge: Annotated[int, Field(ge=0)] = 1
    link_edges_per_epoch: Optional[Annotated[int, Field(ge=1)]] = 50_000
    lambda_link: Annotated[float, Field(ge=0)] = 1.0
    lambda_cls: Annotated[float, Field(ge=0)] = 1.0
    supervised: bool = True
    active_fraction: Annotated[float, Field(gt=0, le=1)] = constants.DEFAULT_ACTIVE_FRACTION
    graph_mode: GcnGraphMode = GcnGraphMode.PROJECTED
    seed: int = 0

    def config_hash(self) -> str:
        return f"{stable_hash(self.model_dump_json()):016x}"


@dataclass
class GcnResult:
    embedding: EmbeddingMatrix
    head_distribution: LabelDistribution | None
    training_log: list[tuple[int, float, float]] = field(default_factory=list)
    runtime_s: float = 0.0


def normalize_adjacency(graph: SparseGraph) -> sp.csr_matrix:
    """``D^-1/2 (W + I) D^-1/2`` for a symmetric graph.

    Isolated nodes keep ``A[i, i] = 1`` through the self-loop.
    """
    if not graph.is_square or not graph.is_symmetric():
        raise GraphError(f"{graph.signal!r} must be symmetric before normalization")
    w = graph.matrix + sp.identity(graph.n, format="csr")
    deg = np.asarray(w.sum(axis=1)).ravel()
    d = sp.diags(1.0 / np.sqrt(deg))
    return sp.csr_matrix(d @ w @ d)


def to_torch_sparse(m: sp.csr_matrix, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    coo = m.tocoo()
    indices = torch.from_numpy(np.vstack([coo.row, coo.col]).astype(np.int64))
    values = torch.from_numpy(coo.data).to(dtype)
    return torch.sparse_coo_tensor(indices, values, coo.shape).coalesce()


def initial_features(users: Sequence[str], in_dim: int, seed: int) -> np.ndarray:
    """Uniform [0, 1) input rows, one random stream per user id."""
    x = np.empty((len(users), in_dim))
    for i, uid in enumerate(users):
        x[i] = np.random.default_rng(derive_seed(seed, "gcn-features", uid)).random(in_dim)
    return x


class GcnEncoder(nn.Module):
    """``H = ReLU(A X W1)`` (optionally a second layer) plus a linear class head."""

    def __init__(
        self,
        features: np.ndarray,
        hidden_dim: int,
        n_classes: int,
        layers: int = 1,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        in_dim = features.shape[1]
        gen = torch.Generator().manual_seed(derive_seed(seed, "gcn-weights") % 2**63)
        self.x = nn.Parameter(torch.as_tensor(features, dtype=dtype))
        # small weights keep initial dot products near zero, i.e. the link loss at chance
        bound = 1.0 / in_dim
        self.weights = nn.ParameterList()
        dims = [in_dim] + [hidden_dim] * layers
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            w = torch.empty(d_in, d_out, dtype=dtype).uniform_(-bound, bound, generator=gen)
            self.weights.append(nn.Parameter(w))
        head_bound = 1.0 / np.sqrt(hidden_dim)
        self.head_weight = nn.Parameter(
            torch.empty(hidden_dim, n_classes, dtype=dtype).uniform_(
                -head_bound, head_bound, generator=gen
            )
        )
        self.head_bias = nn.Parameter(torch.zeros(n_classes, dtype=dtype))

    def forward(self, adj: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.x
        for w in self.weights:
            if h.shape[1] != w.shape[0]:
                raise GraphError(
                    f"feature width {h.shape[1]} does not match weight {tuple(w.shape)}"
                )
            h = torch.relu(torch.sparse.mm(adj, h @ w))
        logits = h @ self.head_weight + self.head_bias
        return h, logits


class EdgeSampler:
    """Positive edges and uniform non-edge negatives in user-id order.

    Pairs are drawn over canonical ranks (position of the user id in sorted
    order), so two graphs that differ only by node order see the same pairs.
    """

    def __init__(self, graph: SparseGraph, rng: np.random.Generator):
        self.rng = rng
        ids = list(graph.users)
        order = np.argsort(np.array(ids, dtype=object), kind="stable")
        self.rank_to_index = order.astype(np.int64)
        rank = np.empty_like(self.rank_to_index)
        rank[order] = np.arange(len(ids))
        self.n = len(ids)

        coo = sp.triu(graph.matrix, k=1).tocoo()
        a, b = rank[coo.row], rank[coo.col]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = np.unique(lo * self.n + hi)
        self.edge_keys = keys
        if self.n:
            self.edges = np.stack([keys // self.n, keys % self.n], axis=1)
        else:
            self.edges = np.zeros((0, 2), dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def positives(self, limit: int | None) -> np.ndarray:
        if limit is None or limit >= self.n_edges:
            return self.rank_to_index[self.edges]
        pick = np.sort(self.rng.choice(self.n_edges, size=limit, replace=False))
        return self.rank_to_index[self.edges[pick]]

    def negatives(self, count: int) -> np.ndarray:
        if count == 0 or self.n < 2:
            return np.zeros((0, 2), dtype=np.int64)
        max_pairs = self.n * (self.n - 1) // 2 - self.n_edges
        if max_pairs <= 0:
            return np.zeros((0, 2), dtype=np.int64)
        out = []
        have = 0
        while have < count:
            u = self.rng.integers(0, self.n, size=2 * (count - have))
            v = self.rng.integers(0, self.n, size=2 * (count - have))
            lo, hi = np.minimum(u, v), np.maximum(u, v)
            ok = (lo != hi) & ~np.isin(lo * self.n + hi, self.edge_keys)
            pairs = np.stack([lo[ok], hi[ok]], axis=1)[: count - have]
            out.append(pairs)
            have += len(pairs)
        return self.rank_to_index[np.concatenate(out)]


def link_loss(h: torch.Tensor, positives: np.ndarray, negatives: np.ndarray) -> torch.Tensor:
    """Mean BCE of ``sigmoid(h_i . h_j)``: 1 for edges, 0 for sampled non-edges."""
    pairs = np.concatenate([positives, negatives]).astype(np.int64)
    if len(pairs) == 0:
        return h.sum() * 0.0
    idx = torch.from_numpy(pairs)
    scores = (h[idx[:, 0]] * h[idx[:, 1]]).sum(dim=1)
    target = torch.cat(
        [torch.ones(len(positives), dtype=h.dtype), torch.zeros(len(negatives), dtype=h.dtype)]
    )
    return F.binary_cross_entropy_with_logits(scores, target)


def training_rows(
    graph: SparseGraph,
    seeds: LabeledUserSet,
    activity: Mapping[str, int],
    fraction: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Indices and labels of the most active seeded users.

    Count ties at the cutoff go to the smaller user id, not the smaller
    node index, so the choice survives a reordering of the graph.
    """
    seeded = {u: activity.get(u, 0) for u in seeds if u in graph.users}
    by_id = UserRegistry(sorted(seeded))
    chosen = sorted(top_active_from_counts(seeded, by_id, fraction))
    idx = np.array(graph.users.indices(chosen), dtype=np.int64)
    labels = np.array([seeds.label_of(u) for u in chosen], dtype=np.int64)
    return idx, labels


class GcnObjective:
    """Forward pass and joint loss over one prepared graph."""

    def __init__(
        self,
        graph: SparseGraph,
        seeds: LabeledUserSet,
        config: GcnConfig,
        activity: Mapping[str, int] | None = None,
        dtype: torch.dtype = torch.float32,
    ):
        self.config = config
        self.source = graph
        self.graph = undirected_view(graph, projected=config.graph_mode is GcnGraphMode.PROJECTED)
        self.classes = seeds.classes
        self.adj = to_torch_sparse(normalize_adjacency(self.graph), dtype)
        features = initial_features(list(self.graph.users), config.in_dim, config.seed)
        self.model = GcnEncoder(
            features, config.hidden_dim, len(seeds.classes), config.layers, config.seed, dtype
        )
        self.sampler = EdgeSampler(
            self.graph, np.random.default_rng(derive_seed(config.seed, "gcn-edges"))
        )
        if activity is None:
            activity = activity_from_graph(graph)
        self.train_idx, labels = training_rows(
            self.graph, seeds, activity, config.active_fraction
        )
        self.train_labels = torch.from_numpy(labels)
        if config.supervised and config.lambda_cls > 0 and len(self.train_idx) == 0:
            raise TrainingError("supervised training needs labeled users in the graph")

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        pos = self.sampler.positives(self.config.link_edges_per_epoch)
        neg = self.sampler.negatives(len(pos) * self.config.neg_samples_per_edge)
        return pos, neg

    def losses(
        self, positives: np.ndarray, negatives: np.ndarray
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        h, logits = self.model(self.adj)
        l_link = link_loss(h, positives, negatives)
        if self.config.supervised and len(self.train_idx):
            l_cls = F.cross_entropy(logits[torch.from_numpy(self.train_idx)], self.train_labels)
        else:
            l_cls = logits.sum() * 0.0
        total = self.config.lambda_link * l_link + self.config.lambda_cls * l_cls
        return total, l_link, l_cls


def train(
    graph: SparseGraph,
    seeds: LabeledUserSet,
    config: GcnConfig | None = None,
    activity: Mapping[str, int] | None = None,
) -> GcnResult:
    """Full-batch Adam training of the encoder for ``config.epochs`` epochs.

    Args:
        graph: Direct, bipartite or projected graph of one signal.
        seeds: Training labels; only the most active seeded users are used
            for the classification term.
        config: Model and optimizer settings.
        activity: Raw per-user activity counts; column sums of ``graph``
            when omitted.

    Returns:
        GcnResult: Embeddings, the head's class distribution (supervised
        runs) and the per-epoch loss log.

    Raises:
        TrainingError: On a non-finite loss, naming the epoch.
    """
    config = config or GcnConfig()
    started = time.perf_counter()
    objective = GcnObjective(graph, seeds, config, activity)
    model = objective.model
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
    )
    log.info(
        "Training GCN on %s: %d nodes, %d edges, %d labeled, %d epochs",
        objective.graph.signal,
        objective.graph.n,
        objective.sampler.n_edges,
        len(objective.train_idx),
        config.epochs,
    )

    history = []
    for epoch in range(1, config.epochs + 1):
        pos, neg = objective.sample()
        optimizer.zero_grad()
        total, l_link, l_cls = objective.losses(pos, neg)
        if not torch.isfinite(total):
            raise TrainingError("loss diverged to a non-finite value", epoch)
        if total.requires_grad:
            total.backward()
            optimizer.step()
        history.append((epoch, float(l_link.detach()), float(l_cls.detach())))
        if epoch % 100 == 0:
            log.debug("epoch %d: link=%.4f cls=%.4f", epoch, history[-1][1], history[-1][2])

    with torch.no_grad():
        h, logits = model(objective.adj)
    embedding = EmbeddingMatrix(
        objective.graph.users,
        h.detach().to(torch.float64).numpy(),
        graph.signal,
        config.config_hash(),
    )
    head = None
    if config.supervised:
        probs = torch.softmax(logits.to(torch.float64), dim=1).numpy()
        head = LabelDistribution(probs, objective.graph.users, seeds.classes)
    runtime = time.perf_counter() - started
    log.info("Trained GCN on %s in %.2fs", graph.signal, runtime)
    return GcnResult(embedding, head, history, runtime)


def write_training_log(result: GcnResult, path: str | Path) -> None:
    pd.DataFrame(result.training_log, columns=TRAINING_LOG_COLUMNS).to_csv(path, index=False)


def gradient_check(
    loss_fn: Callable[[], torch.Tensor],
    params: Sequence[torch.Tensor],
    n_params: int = 50,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central finite differences.

    Checks ``n_params`` randomly chosen scalar entries of ``params``; the
    error of one entry is ``|analytic - numeric| / max(1, |numeric|)``.
    """
    params = list(params)
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    slots = [(k, i) for k, p in enumerate(params) for i in range(p.numel())]
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(slots), size=min(n_params, len(slots)), replace=False)

    worst = 0.0
    with torch.no_grad():
        for s in sorted(picks):
            k, i = slots[s]
            flat = params[k].data.view(-1)
            orig = flat[i].item()
            flat[i] = orig + step
            plus = loss_fn().item()
            flat[i] = orig - step
            minus = loss_fn().item()
            flat[i] = orig
            numeric = (plus - minus) / (2 * step)
            grad = grads[k]
            analytic = 0.0 if grad is None else grad.view(-1)[i].item()
            worst = max(worst, abs(analytic - numeric) / max(1.0, abs(numeric)))
    return worst


def gcn_gradient_check(
    graph: SparseGraph,
    seeds: LabeledUserSet,
    config: GcnConfig,
    n_params: int = 50,
    step: float = 1e-5,
) -> float:
    """Gradient check of the full GCN loss in float64 with fixed negatives."""
    objective = GcnObjective(graph, seeds, config, dtype=torch.float64)
    pos, neg = objective.sample()

    def loss_fn() -> torch.Tensor:
        return objective.losses(pos, neg)[0]

    return gradient_check(loss_fn, list(objective.model.parameters()), n_params, step, config.seed)
