"""Stochastic block model graphs with Gaussian class-conditional features."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .graph import GraphBundle, canonical_edges
from .partition import split_nodes


class SbmSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_blocks: int = Field(default=4, ge=1)
    nodes_per_block: int = Field(default=150, ge=2)
    p_in: float = Field(default=0.05, ge=0.0, le=1.0)
    p_out: float = Field(default=0.002, ge=0.0, le=1.0)
    feature_dim: int = Field(default=16, ge=1)
    center_separation: float = Field(default=1.0, ge=0.0)
    feature_noise: float = Field(default=1.0, ge=0.0)
    split_ratios: tuple[float, float, float] = (0.2, 0.4, 0.4)
    seed: int | None = None

    @model_validator(mode="after")
    def _check_probabilities(self):
        if self.p_out > self.p_in:
            raise ValueError(f"p_out ({self.p_out}) must not exceed p_in ({self.p_in})")
        return self


def generate_sbm(spec: SbmSpec, seed: int | None = None) -> GraphBundle:
    """Sample an SBM graph; labels are block ids and splits are stratified per block.

    ``seed`` is used when ``spec.seed`` is unset.
    """
    seed = spec.seed if spec.seed is not None else seed
    if seed is None:
        raise ValueError("generate_sbm needs a seed (in the SbmSpec or as an argument)")
    ss = np.random.SeedSequence(seed)
    edge_ss, feat_ss = ss.spawn(2)
    edge_rng = np.random.default_rng(edge_ss)
    feat_rng = np.random.default_rng(feat_ss)
    split_seed = int(ss.generate_state(1)[0])

    n = spec.n_blocks * spec.nodes_per_block
    labels = np.repeat(np.arange(spec.n_blocks), spec.nodes_per_block)
    iu, ju = np.triu_indices(n, k=1)
    probs = np.where(labels[iu] == labels[ju], spec.p_in, spec.p_out)
    hit = edge_rng.random(iu.size) < probs
    edges, _ = canonical_edges(zip(iu[hit], ju[hit]), n)

    centers = feat_rng.standard_normal((spec.n_blocks, spec.feature_dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    centers *= spec.center_separation
    features = centers[labels] + spec.feature_noise * feat_rng.standard_normal((n, spec.feature_dim))

    bundle = GraphBundle(
        n_nodes=n,
        n_classes=spec.n_blocks,
        features=features,
        labels=labels.astype(np.int64),
        edges=edges,
        split=np.full(n, "train", dtype="<U5"),
    )
    return bundle.with_split(split_nodes(bundle, spec.split_ratios, split_seed))
