# app/ml/fusion.py
"""Concatenation of per-signal embeddings into one feature matrix."""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from app.errors import ClassifierError
from app.models.graph import EmbeddingMatrix
from app.models.interaction import UserRegistry

log = logging.getLogger("ml.fusion")


@dataclass(eq=False)
class FusedFeatures:
    """N x sum(d_s) features with one column block per signal.

    ``mask[i, s]`` is False when user i has no embedding for signal s; that
    block is exactly zero.
    """

    features: np.ndarray
    mask: np.ndarray
    users: UserRegistry
    signals: tuple[str, ...]
    widths: tuple[int, ...]

    @property
    def absent(self) -> np.ndarray:
        """Users missing every signal."""
        if self.mask.shape[1] == 0:
            return np.ones(len(self.users), dtype=bool)
        return ~self.mask.any(axis=1)

    def rows(self, users: Iterable[str]) -> np.ndarray:
        return self.features[self.users.indices(users)]

    def block(self, signal: str) -> np.ndarray:
        s = self.signals.index(signal)
        start = sum(self.widths[:s])
        return self.features[:, start : start + self.widths[s]]

    @classmethod
    def from_array(cls, features: np.ndarray, users: UserRegistry | None = None) -> "FusedFeatures":
        """Single-block features from a raw matrix, every row present."""
        features = np.asarray(features, dtype=np.float64)
        if users is None:
            users = UserRegistry(f"row{i}" for i in range(features.shape[0]))
        mask = np.ones((features.shape[0], 1), dtype=bool)
        return cls(features, mask, users, ("features",), (features.shape[1],))


def fuse(
    embeddings: Sequence[EmbeddingMatrix],
    registry: UserRegistry,
    order: Sequence[str] | None = None,
) -> FusedFeatures:
    """Concatenate ``embeddings`` over ``registry`` in signal ``order``.

    Users missing from a signal get a zero block; embedding rows for users
    outside ``registry`` are ignored.

    Raises:
        ClassifierError: Duplicate signal tags, or an ``order`` that does not
            name exactly the given signals.
    """
    by_signal: dict[str, EmbeddingMatrix] = {}
    for emb in embeddings:
        if emb.signal in by_signal:
            raise ClassifierError(f"duplicate signal {emb.signal!r} in fusion input")
        by_signal[emb.signal] = emb
    order = list(order) if order is not None else list(by_signal)
    if sorted(order) != sorted(by_signal):
        raise ClassifierError(
            f"signal order {order} does not match embeddings {list(by_signal)}"
        )

    n = len(registry)
    blocks, masks = [], []
    for signal in order:
        emb = by_signal[signal]
        block = np.zeros((n, emb.dim))
        present = np.zeros(n, dtype=bool)
        shared = [u for u in emb.users if u in registry]
        if shared:
            dst = registry.indices(shared)
            block[dst] = emb.vectors[emb.users.indices(shared)]
            present[dst] = True
        blocks.append(block)
        masks.append(present)
        log.debug("Signal %s covers %d of %d users", signal, int(present.sum()), n)

    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    mask = np.column_stack(masks) if masks else np.zeros((n, 0), dtype=bool)
    widths = tuple(by_signal[s].dim for s in order)
    log.info("Fused %d signals into %d features for %d users", len(order), features.shape[1], n)
    return FusedFeatures(features, mask, registry, tuple(order), widths)
