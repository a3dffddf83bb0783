"""Label-noise injection for client training nodes."""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

NoiseKind = Literal["none", "uniform", "pair"]


class NoiseSpec(BaseModel):
    """Per-client noise rates are drawn from U(eta_lower, eta_upper).

    ``eta`` is a shorthand for a homogeneous rate (eta_lower = eta_upper = eta).
    ``seed`` defaults to a stream derived from the run seed when left unset.
    """

    model_config = ConfigDict(extra="forbid")

    kind: NoiseKind = "none"
    eta: float | None = Field(default=None, ge=0.0, le=1.0)
    eta_lower: float = Field(default=0.0, ge=0.0, le=1.0)
    eta_upper: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int | None = None

    @model_validator(mode="after")
    def _resolve_eta(self):
        if self.eta is not None:
            self.eta_lower = self.eta_upper = self.eta
            self.eta = None
        if self.eta_lower > self.eta_upper:
            raise ValueError(f"eta_lower ({self.eta_lower}) exceeds eta_upper ({self.eta_upper})")
        return self


def sample_client_rates(spec: NoiseSpec, n_clients: int, seed: int | None = None) -> np.ndarray:
    if spec.kind == "none":
        return np.zeros(n_clients)
    seed = spec.seed if spec.seed is not None else seed
    rng = np.random.default_rng(seed)
    return rng.uniform(spec.eta_lower, spec.eta_upper, size=n_clients)


def inject(labels, train_nodes, rate: float, kind: str, n_classes: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Corrupt each train node's label independently with probability ``rate``.

    uniform: the new label is drawn uniformly from the other n_classes - 1 classes.
    pair:    class c becomes (c + 1) mod n_classes.
    Returns (noisy labels, mask of nodes whose label changed).
    """
    labels = np.asarray(labels, dtype=np.int64)
    train_nodes = np.asarray(train_nodes, dtype=np.int64)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"noise rate {rate} outside [0, 1]")
    noisy = labels.copy()
    mask = np.zeros(labels.shape, dtype=bool)
    if kind == "none" or rate == 0.0 or train_nodes.size == 0:
        return noisy, mask
    if n_classes < 2:
        raise ValueError("label noise needs at least two classes")
    rng = np.random.default_rng(seed)
    hit = train_nodes[rng.random(train_nodes.size) < rate]
    if kind == "uniform":
        noisy[hit] = (labels[hit] + rng.integers(1, n_classes, size=hit.size)) % n_classes
    elif kind == "pair":
        noisy[hit] = (labels[hit] + 1) % n_classes
    else:
        raise ValueError(f"unknown noise kind {kind!r}")
    mask[hit] = True
    return noisy, mask
