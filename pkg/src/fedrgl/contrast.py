"""Graph views, the node-level contrastive objective, and pseudo-label losses."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import numeric as nm
from .graph import GraphBundle, NormalizedAdjacency, sym_normalize
from .model import softmax
from .numeric import Tensor

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AugmentedView:
    edges: np.ndarray
    features: np.ndarray
    kept_edges: np.ndarray  # bool per original edge
    masked_columns: np.ndarray  # bool per feature column
    seed: object

    def gcn_operator(self, n_nodes: int) -> NormalizedAdjacency:
        A = np.zeros((n_nodes, n_nodes))
        if self.edges.size:
            A[self.edges[:, 0], self.edges[:, 1]] = 1.0
            A[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return NormalizedAdjacency(sym_normalize(A + np.eye(n_nodes)), "gcn")


def augment(bundle: GraphBundle, p_edge_drop: float, p_feat_mask: float, seed) -> AugmentedView:
    """Drop each edge w.p. ``p_edge_drop``; zero each feature column w.p. ``p_feat_mask``."""
    for p in (p_edge_drop, p_feat_mask):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"augmentation probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    kept = rng.random(bundle.n_edges) >= p_edge_drop
    masked = rng.random(bundle.n_features) < p_feat_mask
    features = bundle.features.copy()
    features[:, masked] = 0.0
    return AugmentedView(bundle.edges[kept], features, kept, masked, seed)


def _one_side(z1n: Tensor, z2n: Tensor, tau: float) -> Tensor:
    """Mean over nodes of -log(pos / (inter-view sum + intra-view sum without self))."""
    n = z1n.shape[0]
    eye = np.eye(n, dtype=bool)
    inter = nm.scale(nm.matmul(z1n, nm.transpose(z2n)), 1.0 / tau)
    intra = nm.scale(nm.matmul(z1n, nm.transpose(z1n)), 1.0 / tau)
    denom = nm.add(
        nm.row_sum(nm.exp(inter)),
        nm.row_sum(nm.masked_assign(nm.exp(intra), eye, 0.0)),
    )
    # log of the positive term is the scaled similarity itself
    log_pos = nm.row_sum(nm.masked_assign(inter, ~eye, 0.0))
    return nm.mean_all(nm.sub(nm.log(denom), log_pos))


def contrastive_loss(Z1: Tensor, Z2: Tensor, tau: float = 0.5) -> Tensor:
    """Symmetrised InfoNCE with cosine similarity over all nodes of two views."""
    if Z1.shape != Z2.shape:
        raise nm.DimensionError(f"views disagree in shape: {Z1.shape} vs {Z2.shape}")
    if Z1.shape[0] < 2:
        log.warning("contrastive loss needs at least two nodes; returning 0")
        return nm.scale(nm.sum_all(Z1), 0.0)
    z1n = nm.l2_normalize_rows(Z1)
    z2n = nm.l2_normalize_rows(Z2)
    return nm.scale(nm.add(_one_side(z1n, z2n, tau), _one_side(z2n, z1n, tau)), 0.5)


@dataclass(frozen=True)
class PseudoLabelSet:
    nodes: np.ndarray
    labels: np.ndarray
    confidence: np.ndarray

    def __len__(self) -> int:
        return int(self.nodes.size)

    def accuracy(self, true_labels) -> float | None:
        if not len(self):
            return None
        return float((np.asarray(true_labels)[self.nodes] == self.labels).mean())


def pseudo_labels(P1, P2, noisy_set, gamma: float) -> PseudoLabelSet:
    """Noisy nodes whose averaged two-view prediction is more confident than ``gamma``."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    noisy = np.asarray(noisy_set, dtype=np.int64)
    if noisy.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return PseudoLabelSet(empty, empty.copy(), np.zeros(0))
    P1 = P1.data if isinstance(P1, Tensor) else np.asarray(P1)
    P2 = P2.data if isinstance(P2, Tensor) else np.asarray(P2)
    probs = softmax((P1[noisy] + P2[noisy]) / 2.0)
    conf = probs.max(axis=1)
    hard = probs.argmax(axis=1)
    keep = conf > gamma
    return PseudoLabelSet(noisy[keep], hard[keep].astype(np.int64), conf[keep])


def _zero(t: Tensor) -> Tensor:
    return nm.scale(nm.sum_all(t), 0.0)


def pseudo_loss(P1: Tensor, P2: Tensor, pseudo: PseudoLabelSet) -> Tensor:
    """Average of the two views' mean cross-entropy against the pseudo-labels."""
    if not len(pseudo):
        return _zero(P1)
    ce1 = nm.cross_entropy(P1, pseudo.nodes, pseudo.labels)
    ce2 = nm.cross_entropy(P2, pseudo.nodes, pseudo.labels)
    return nm.scale(nm.add(ce1, ce2), 0.5)


def _kl_to(p: Tensor, log_m: Tensor) -> Tensor:
    """Per-row KL(p || m) given log m."""
    return nm.row_sum(nm.mul(p, nm.sub(nm.log(p), log_m)))


def js_loss(Phat: Tensor, Phat1: Tensor, Phat2: Tensor, pseudo: PseudoLabelSet) -> Tensor:
    """Three-way Jensen-Shannon divergence on pseudo-labelled rows, averaged over them."""
    if not len(pseudo):
        return _zero(Phat)
    rows = pseudo.nodes
    p0, p1, p2 = (nm.gather_rows(P, rows) for P in (Phat, Phat1, Phat2))
    log_m = nm.log(nm.scale(nm.add(nm.add(p0, p1), p2), 1.0 / 3.0))
    total = nm.add(nm.add(_kl_to(p0, log_m), _kl_to(p1, log_m)), _kl_to(p2, log_m))
    return nm.scale(nm.mean_all(total), 1.0 / 3.0)
