# app/processing/polarization.py
"""Modularity of a labeled partition and its sensitivity to label noise."""

import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app import constants
from app.errors import PolarizationError
from app.graphs.build import induced_subgraph, undirected_view
from app.models.graph import SparseGraph
from app.models.labels import LabeledUserSet
from app.utils.utils import derive_seed

log = logging.getLogger("processing.polarization")

CURVE_COLUMNS = ["swap_fraction", "sim_accuracy", "q_mean", "q_sd"]


@dataclass
class SweepPoint:
    swap_fraction: float
    sim_accuracy: float
    q_mean: float
    q_sd: float


def partition_from_labels(graph: SparseGraph, labeled: LabeledUserSet) -> np.ndarray:
    """Community per graph node; unlabeled users get ``ABSTAIN``."""
    out = np.full(graph.n, constants.ABSTAIN, dtype=np.int64)
    for uid, entry in labeled.items():
        if uid in graph.users:
            out[graph.users.index(uid)] = entry.label
    return out


def _community_sums(graph: SparseGraph, partition: np.ndarray):
    """Labeled subgraph's (internal weight e_c, degree sum K_c, 2m) per community."""
    keep = partition != constants.ABSTAIN
    g = undirected_view(graph, projected=False)
    if not keep.all():
        g = induced_subgraph(g, [uid for uid, k in zip(g.users, keep) if k])
    labels = np.asarray(partition, dtype=np.int64)[keep]
    coo = g.matrix.tocoo()
    if coo.nnz == 0:
        raise PolarizationError("modularity is undefined on a graph without edges")
    n_comm = int(labels.max()) + 1 if labels.size else 0
    same = labels[coo.row] == labels[coo.col]
    return labels, coo, same, n_comm


def modularity(
    graph: SparseGraph, partition: np.ndarray, exact: bool = False
) -> float | Fraction:
    """Newman-Girvan Q of ``partition`` on the symmetrized graph.

    Nodes whose community is ``ABSTAIN`` are dropped first. With ``exact``
    the value is a :class:`fractions.Fraction`, exact for integer weights.

    Raises:
        PolarizationError: The remaining graph has no edges.
    """
    labels, coo, same, n_comm = _community_sums(graph, partition)
    if exact:
        data = [Fraction(float(w)) for w in coo.data]
        two_m = sum(data, Fraction(0))
        internal = [Fraction(0)] * n_comm
        degree = [Fraction(0)] * n_comm
        for r, c, w in zip(coo.row, coo.col, data):
            degree[labels[r]] += w
            if labels[r] == labels[c]:
                internal[labels[r]] += w
        return sum((e - k * k / two_m for e, k in zip(internal, degree)), Fraction(0)) / two_m

    two_m = math.fsum(coo.data)
    row_comm = labels[coo.row]
    internal = np.bincount(row_comm[same], weights=coo.data[same], minlength=n_comm)
    degree = np.bincount(row_comm, weights=coo.data, minlength=n_comm)
    # K * (K / 2m) makes the single-community case cancel exactly
    return math.fsum(e - k * (k / two_m) for e, k in zip(internal, degree)) / two_m


def _swap(
    labels: np.ndarray, labeled_idx: np.ndarray, n_classes: int, fraction: float, seed: int
) -> np.ndarray:
    """Reassign ``fraction`` of the labeled nodes to a different random class."""
    rng = np.random.default_rng(seed)
    out = labels.copy()
    n_swap = int(round(fraction * len(labeled_idx)))
    if n_swap == 0:
        return out
    picked = rng.choice(labeled_idx, size=n_swap, replace=False)
    out[picked] = (out[picked] + rng.integers(1, n_classes, size=n_swap)) % n_classes
    return out


def noise_sweep(
    graph: SparseGraph,
    gold: LabeledUserSet,
    swap_fractions: Sequence[float],
    trials: int = 20,
    seed: int = 0,
    threads: int = 1,
) -> list[SweepPoint]:
    """Q of the gold partition after randomly reassigning a fraction of labels.

    Every (fraction, trial) draws from its own seed stream, so the curve does
    not depend on ``threads``.
    """
    if any(not 0 <= f <= 0.5 for f in swap_fractions):
        raise PolarizationError("swap fractions must lie in [0, 0.5]")
    if trials < 1:
        raise PolarizationError("trials must be positive")
    g = undirected_view(graph, projected=False)
    base = partition_from_labels(g, gold)
    labeled_idx = np.flatnonzero(base != constants.ABSTAIN)
    k = len(gold.classes)

    def run(fi: int, trial: int) -> tuple[float, float]:
        stream = derive_seed(seed, "noise", fi, trial)
        noisy = _swap(base, labeled_idx, k, swap_fractions[fi], stream)
        acc = float(np.mean(noisy[labeled_idx] == base[labeled_idx])) if len(labeled_idx) else 0.0
        return acc, modularity(g, noisy)

    jobs = [(fi, t) for fi in range(len(swap_fractions)) for t in range(trials)]
    results = Parallel(n_jobs=threads, prefer="threads")(delayed(run)(fi, t) for fi, t in jobs)

    points = []
    for fi, f in enumerate(swap_fractions):
        chunk = results[fi * trials : (fi + 1) * trials]
        accs = np.array([a for a, _ in chunk])
        qs = np.array([q for _, q in chunk])
        points.append(
            SweepPoint(
                swap_fraction=float(f),
                sim_accuracy=float(accs.mean()),
                q_mean=float(qs.mean()),
                q_sd=float(qs.std(ddof=1)) if trials > 1 else 0.0,
            )
        )
        log.debug("swap %.2f: Q %.4f", f, points[-1].q_mean)
    log.info("Noise sweep over %d fractions x %d trials done", len(swap_fractions), trials)
    return points


def write_curve(points: Sequence[SweepPoint], path: str | Path) -> None:
    pd.DataFrame([asdict(p) for p in points], columns=CURVE_COLUMNS).to_csv(path, index=False)


def plot_curve(points: Sequence[SweepPoint], path: str | Path) -> None:
    """Modularity against simulated accuracy, saved as an image."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    acc = [p.sim_accuracy for p in points]
    q = [p.q_mean for p in points]
    sd = [p.q_sd for p in points]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.errorbar(acc, q, yerr=sd, marker="o", capsize=3)
    ax.set_xlabel("simulated accuracy")
    ax.set_ylabel("modularity Q")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
