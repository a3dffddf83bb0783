"""Class-aware dual-consistency noisy-node filtering.

Two views score each training node by a cross-entropy loss against its
(possibly noisy) label: the global model's prediction, and a label-propagation
soft label computed over train-train edges only.  Each view keeps the nodes
whose loss is under a per-class threshold mean + phi * std; a node is clean
when both views keep it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import softmax
from .numeric import LOG_FLOOR

# a class whose losses spread less than this counts as zero-variance
ZERO_STD = 1e-12


@dataclass(frozen=True)
class ClassStat:
    count: int
    mean: float
    std: float
    threshold: float

    @property
    def degenerate(self) -> bool:
        return self.count <= 1 or self.std <= ZERO_STD


@dataclass(frozen=True)
class ClassThresholds:
    phi: float
    stats: dict[int, ClassStat]

    def threshold(self, c: int) -> float:
        return self.stats[c].threshold


@dataclass(frozen=True)
class FilterOutcome:
    train_nodes: np.ndarray
    clean_global: np.ndarray
    clean_structural: np.ndarray
    clean: np.ndarray
    noisy: np.ndarray
    global_thresholds: ClassThresholds | None
    structural_thresholds: ClassThresholds | None
    lp_soft_labels: np.ndarray | None = None

    def precision_recall(self, noise_mask) -> tuple[float | None, float | None]:
        """Precision and recall of ``noisy`` against ground-truth corruption flags."""
        if noise_mask is None:
            return None, None
        truth = np.asarray(noise_mask, dtype=bool)
        flagged = truth[self.noisy]
        n_true = int(truth[self.train_nodes].sum())
        precision = float(flagged.mean()) if self.noisy.size else None
        recall = float(flagged.sum() / n_true) if n_true else None
        return precision, recall


def per_node_ce(logits, labels, node_set) -> np.ndarray:
    nodes = np.asarray(node_set, dtype=np.int64)
    probs = softmax(np.asarray(logits, dtype=np.float64)[nodes])
    picked = probs[np.arange(nodes.size), np.asarray(labels)[nodes]]
    return -np.log(np.maximum(picked, LOG_FLOOR))


def class_thresholds(losses, labels, phi: float) -> ClassThresholds:
    """Population mean and std of the loss within each class present in ``labels``."""
    losses = np.asarray(losses, dtype=np.float64)
    labels = np.asarray(labels)
    stats = {}
    for c in np.unique(labels):
        vals = losses[labels == c]
        mean = float(vals.mean())
        std = float(np.sqrt(((vals - mean) ** 2).mean()))
        stats[int(c)] = ClassStat(int(vals.size), mean, std, mean + phi * std)
    return ClassThresholds(float(phi), stats)


def select_clean(losses, labels, thresholds: ClassThresholds) -> np.ndarray:
    """Boolean mask of entries with loss strictly under their class threshold.

    Classes with at most one node or zero spread are kept whole.
    """
    losses = np.asarray(losses, dtype=np.float64)
    labels = np.asarray(labels)
    keep = np.zeros(losses.shape, dtype=bool)
    for c, stat in thresholds.stats.items():
        members = labels == c
        if stat.degenerate:
            keep |= members
        else:
            keep |= members & (losses < stat.threshold)
    return keep


def corrected_lp_init(global_logits, labels, train_nodes) -> tuple[np.ndarray, np.ndarray]:
    """Initial LP rows: one-hot label where the global model agrees, its softmax otherwise.

    Returns (Y0 over all nodes with zero non-train rows, ids of the agreeing nodes).
    """
    logits = np.asarray(global_logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    train_nodes = np.asarray(train_nodes, dtype=np.int64)
    n, C = logits.shape
    probs = softmax(logits[train_nodes])
    agree = probs.argmax(axis=1) == labels[train_nodes]
    Y0 = np.zeros((n, C))
    Y0[train_nodes] = probs
    eq_nodes = train_nodes[agree]
    Y0[eq_nodes] = 0.0
    Y0[eq_nodes, labels[eq_nodes]] = 1.0
    return Y0, eq_nodes


def renormalize_rows(Y: np.ndarray) -> np.ndarray:
    s = Y.sum(axis=1, keepdims=True)
    return np.divide(Y, s, out=np.zeros_like(Y), where=s > 0)


def label_propagate(S, Y0, alpha: float, k: int, clamp_set=(), clamp: bool = True, renormalize: bool = True):
    """k steps of Y <- alpha Y + (1 - alpha) S Y.

    With ``clamp`` the rows in ``clamp_set`` are reset to their Y0 value after
    every step.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if k < 0:
        raise ValueError("k must be nonnegative")
    S = np.asarray(S, dtype=np.float64)
    Y0 = np.asarray(Y0, dtype=np.float64)
    clamp_set = np.asarray(clamp_set, dtype=np.int64)
    Y = Y0.copy()
    for _ in range(k):
        Y = alpha * Y + (1.0 - alpha) * (S @ Y)
        if clamp and clamp_set.size:
            Y[clamp_set] = Y0[clamp_set]
    return renormalize_rows(Y) if renormalize else Y


def soft_label_ce(soft_labels, labels, node_set) -> np.ndarray:
    nodes = np.asarray(node_set, dtype=np.int64)
    mass = np.asarray(soft_labels)[nodes, np.asarray(labels)[nodes]]
    return -np.log(np.maximum(mass, LOG_FLOOR))


def dual_filter(
    global_logits,
    lp_soft_labels,
    labels,
    train_nodes,
    phi1: float,
    phi2: float,
    use_global: bool = True,
    use_structural: bool = True,
) -> FilterOutcome:
    """Clean set = global-view clean set intersected with structural-view clean set.

    A disabled view keeps every training node.
    """
    labels = np.asarray(labels, dtype=np.int64)
    train = np.sort(np.asarray(train_nodes, dtype=np.int64))
    y = labels[train]

    g_thr = s_thr = None
    keep1 = np.ones(train.size, dtype=bool)
    keep2 = np.ones(train.size, dtype=bool)
    if use_global:
        losses = per_node_ce(global_logits, labels, train)
        g_thr = class_thresholds(losses, y, phi1)
        keep1 = select_clean(losses, y, g_thr)
    if use_structural:
        losses = soft_label_ce(lp_soft_labels, labels, train)
        s_thr = class_thresholds(losses, y, phi2)
        keep2 = select_clean(losses, y, s_thr)
    both = keep1 & keep2
    return FilterOutcome(
        train_nodes=train,
        clean_global=train[keep1],
        clean_structural=train[keep2],
        clean=train[both],
        noisy=train[~both],
        global_thresholds=g_thr,
        structural_thresholds=s_thr,
        lp_soft_labels=None if lp_soft_labels is None else np.asarray(lp_soft_labels),
    )
