"""Server-side aggregation of client parameters."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..numeric import ParamSet


def fedavg_weights(node_counts: Sequence[int]) -> np.ndarray:
    counts = np.asarray(node_counts, dtype=np.float64)
    if counts.size == 0:
        raise ValueError("no client reports to aggregate")
    return counts / counts.sum()


def entropy_weights(entropies: Sequence[float], epsilon: float = 1e-9) -> np.ndarray:
    """Inverse-entropy weights 1/(H_m + eps), normalised to sum to one."""
    h = np.asarray(entropies, dtype=np.float64)
    if h.size == 0:
        raise ValueError("no client reports to aggregate")
    if np.any(h < 0):
        raise ValueError("predictive entropies must be nonnegative")
    inv = 1.0 / (h + epsilon)
    return inv / inv.sum()


def weighted_average(params: Sequence[ParamSet], weights) -> ParamSet:
    weights = np.asarray(weights, dtype=np.float64)
    flat = np.stack([p.flatten() for p in params])
    return params[0].unflatten(weights @ flat)


def aggregate_fedavg(reports) -> tuple[ParamSet, np.ndarray]:
    w = fedavg_weights([r.n_nodes for r in reports])
    return weighted_average([r.params for r in reports], w), w


def aggregate_entropy(reports, epsilon: float = 1e-9) -> tuple[ParamSet, np.ndarray]:
    w = entropy_weights([r.entropy for r in reports], epsilon)
    return weighted_average([r.params for r in reports], w), w
