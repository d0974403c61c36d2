# app/models/graph.py
"""Sparse weighted graphs over the user registry, and per-signal embeddings."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from app.errors import GraphError
from app.models.interaction import UserRegistry


class GraphMode(str, Enum):
    DIRECT = "direct"
    BIPARTITE = "bipartite"
    PROJECTED = "projected"
    SYMMETRIC = "symmetric"


def canonical_csr(matrix: sp.spmatrix | sp.sparray, shape: tuple[int, int]) -> sp.csr_matrix:
    """CSR with summed duplicates, no explicit zeros and sorted column indices."""
    m = sp.csr_matrix(matrix, shape=shape, dtype=np.float64, copy=True)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    m.indptr = m.indptr.astype(np.int64, copy=False)
    m.indices = m.indices.astype(np.int64, copy=False)
    return m


@dataclass(eq=False)
class SparseGraph:
    """Weighted adjacency in CSR form.

    Direct graphs follow ``A[i, j] = w`` when user j acted on i. Bipartite
    graphs have one row per target (hashtag / liked tweet) and one column
    per user; every other mode is square over ``users``.
    """

    matrix: sp.csr_matrix
    users: UserRegistry
    signal: str
    directed: bool
    mode: GraphMode = GraphMode.DIRECT
    targets: UserRegistry | None = field(default=None)

    def __post_init__(self):
        rows = len(self.targets) if self.targets is not None else len(self.users)
        self.matrix = canonical_csr(self.matrix, (rows, len(self.users)))
        if self.matrix.nnz and self.matrix.data.min() <= 0:
            raise GraphError("edge weights must be positive")
        if self.mode is GraphMode.BIPARTITE and self.targets is None:
            raise GraphError("bipartite graphs need a target registry")

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def is_square(self) -> bool:
        return self.targets is None

    def is_symmetric(self) -> bool:
        if not self.is_square:
            return False
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or np.abs(diff.data).max() == 0

    def degrees(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def structurally_equal(self, other: "SparseGraph") -> bool:
        a, b = self.matrix, other.matrix
        return (
            self.signal == other.signal
            and self.directed == other.directed
            and self.mode == other.mode
            and self.users == other.users
            and self.targets == other.targets
            and a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    def __repr__(self) -> str:
        return (
            f"SparseGraph(signal={self.signal!r}, mode={self.mode.value}, "
            f"n={self.n}, nnz={self.nnz}, directed={self.directed})"
        )


@dataclass(eq=False)
class EmbeddingMatrix:
    """Dense per-user vectors for one signal."""

    users: UserRegistry
    vectors: np.ndarray
    signal: str
    config_hash: str = ""

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.users):
            raise GraphError(
                f"embedding shape {self.vectors.shape} does not match {len(self.users)} users"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise GraphError(f"embedding for signal {self.signal!r} has non-finite entries")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def structurally_equal(self, other: "EmbeddingMatrix") -> bool:
        return (
            self.signal == other.signal
            and self.config_hash == other.config_hash
            and self.users == other.users
            and self.vectors.shape == other.vectors.shape
            and np.array_equal(self.vectors, other.vectors)
        )
