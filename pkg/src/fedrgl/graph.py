"""Graph bundles: storage, validation, normalized operators and induced subgraphs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

TRAIN, VAL, TEST = "train", "val", "test"
SPLIT_TAGS = (TRAIN, VAL, TEST)

REQUIRED_FIELDS = ("n_nodes", "n_classes", "features", "labels", "edges", "split")
OPTIONAL_FIELDS = ("noise_mask",)


class BundleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LoadReport:
    symmetrized_edges: int = 0
    duplicate_edges: int = 0
    self_loops_dropped: int = 0


@dataclass(frozen=True, eq=False)
class GraphBundle:
    """One graph (or client subgraph) with node features, labels and split tags.

    ``edges`` is an (E, 2) int array of undirected pairs with u < v, sorted and
    free of duplicates. ``split`` holds one of "train"/"val"/"test" per node.
    """

    n_nodes: int
    n_classes: int
    features: np.ndarray
    labels: np.ndarray
    edges: np.ndarray
    split: np.ndarray
    noise_mask: np.ndarray | None = None
    report: LoadReport = field(default_factory=LoadReport, compare=False)

    @property
    def train_mask(self) -> np.ndarray:
        return self.split == TRAIN

    @property
    def train_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.split == TRAIN)

    @property
    def val_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.split == VAL)

    @property
    def test_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.split == TEST)

    @property
    def unlabeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.split != TRAIN)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def with_labels(self, labels, noise_mask=None) -> "GraphBundle":
        return replace(self, labels=np.asarray(labels, dtype=np.int64), noise_mask=noise_mask)

    def with_split(self, split) -> "GraphBundle":
        return replace(self, split=np.asarray(split, dtype="<U5"))

    def to_dict(self) -> dict:
        out = {
            "n_nodes": int(self.n_nodes),
            "n_classes": int(self.n_classes),
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
            "edges": self.edges.tolist(),
            "split": self.split.tolist(),
        }
        if self.noise_mask is not None:
            out["noise_mask"] = self.noise_mask.tolist()
        return out


def canonical_edges(pairs, n_nodes: int) -> tuple[np.ndarray, LoadReport]:
    """Sort each pair, drop self-loops and duplicates; count what was repaired."""
    seen: set[tuple[int, int]] = set()
    directed: set[tuple[int, int]] = set()
    loops = dups = 0
    for u, v in pairs:
        u, v = int(u), int(v)
        if u == v:
            loops += 1
            continue
        directed.add((u, v))
        key = (min(u, v), max(u, v))
        if key in seen:
            dups += 1
        seen.add(key)
    # a pair given in one direction only had to be mirrored to become undirected
    symmetrized = sum(1 for u, v in directed if (v, u) not in directed)
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    return edges, LoadReport(symmetrized, dups, loops)


def validate_record(record: dict) -> GraphBundle:
    if not isinstance(record, dict):
        raise BundleFormatError("bundle must be a mapping of fields")
    unknown = sorted(set(record) - set(REQUIRED_FIELDS) - set(OPTIONAL_FIELDS))
    if unknown:
        raise BundleFormatError(f"unknown field(s): {', '.join(unknown)}")
    for name in REQUIRED_FIELDS:
        if name not in record:
            raise BundleFormatError(f"missing field: {name}")

    n, C = record["n_nodes"], record["n_classes"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise BundleFormatError(f"n_nodes must be a positive integer, got {n!r}")
    if not isinstance(C, int) or isinstance(C, bool) or C < 1:
        raise BundleFormatError(f"n_classes must be a positive integer, got {C!r}")

    for name in ("features", "labels", "split"):
        if not isinstance(record[name], list) or len(record[name]) != n:
            raise BundleFormatError(f"{name} must be a list with one entry per node ({n})")

    feats = record["features"]
    width = len(feats[0]) if isinstance(feats[0], list) else -1
    for i, row in enumerate(feats):
        if not isinstance(row, list) or len(row) != width or width < 1:
            raise BundleFormatError(f"features[{i}] must be a list of {max(width, 1)} reals")
    features = np.asarray(feats, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        bad = int(np.argwhere(~np.isfinite(features))[0, 0])
        raise BundleFormatError(f"features[{bad}] contains a non-finite value")

    for i, y in enumerate(record["labels"]):
        if not isinstance(y, int) or isinstance(y, bool) or not 0 <= y < C:
            raise BundleFormatError(f"labels[{i}] = {y!r} is outside [0, {C})")
    labels = np.asarray(record["labels"], dtype=np.int64)

    for i, tag in enumerate(record["split"]):
        if tag not in SPLIT_TAGS:
            raise BundleFormatError(f"split[{i}] = {tag!r} is not one of {SPLIT_TAGS}")
    split = np.asarray(record["split"], dtype="<U5")

    if not isinstance(record["edges"], list):
        raise BundleFormatError("edges must be a list of [u, v] pairs")
    for i, pair in enumerate(record["edges"]):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)
        ):
            raise BundleFormatError(f"edges[{i}] must be a pair of integers, got {pair!r}")
        if not (0 <= pair[0] < n and 0 <= pair[1] < n):
            raise BundleFormatError(f"edges[{i}] = {pair} has an endpoint outside [0, {n})")
    edges, report = canonical_edges(record["edges"], n)

    noise_mask = None
    if record.get("noise_mask") is not None:
        raw = record["noise_mask"]
        if not isinstance(raw, list) or len(raw) != n:
            raise BundleFormatError(f"noise_mask must be a list with one entry per node ({n})")
        for i, flag in enumerate(raw):
            if not isinstance(flag, bool):
                raise BundleFormatError(f"noise_mask[{i}] = {flag!r} is not a boolean")
            if flag and split[i] != TRAIN:
                raise BundleFormatError(f"noise_mask[{i}] is set on a {split[i]} node")
        noise_mask = np.asarray(raw, dtype=bool)

    return GraphBundle(n, C, features, labels, edges, split, noise_mask, report)


def load_bundle(path) -> GraphBundle:
    text = Path(path).read_text(encoding="utf-8")
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleFormatError(f"{path}: not valid JSON ({exc})") from exc
    return validate_record(record)


def save_bundle(bundle: GraphBundle, path) -> None:
    Path(path).write_text(json.dumps(bundle.to_dict()), encoding="utf-8")


def adjacency(bundle: GraphBundle) -> np.ndarray:
    A = np.zeros((bundle.n_nodes, bundle.n_nodes))
    if bundle.n_edges:
        u, v = bundle.edges[:, 0], bundle.edges[:, 1]
        A[u, v] = 1.0
        A[v, u] = 1.0
    return A


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    matrix: np.ndarray
    kind: str


def sym_normalize(A: np.ndarray) -> np.ndarray:
    deg = A.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return inv_sqrt[:, None] * A * inv_sqrt[None, :]


def gcn_normalize(bundle: GraphBundle) -> NormalizedAdjacency:
    """D~^-1/2 (A + I) D~^-1/2."""
    A = adjacency(bundle) + np.eye(bundle.n_nodes)
    return NormalizedAdjacency(sym_normalize(A), "gcn")


def masked_lp_normalize(bundle: GraphBundle, train_mask) -> NormalizedAdjacency:
    """Propagation operator restricted to edges between two masked nodes, no self-loops.

    Rows of masked nodes without any masked neighbour are all zero.
    """
    m = np.asarray(train_mask, dtype=np.float64)
    if m.shape != (bundle.n_nodes,) or not m.any():
        raise ValueError("train_mask must be a nonempty boolean vector over all nodes")
    A = adjacency(bundle) * np.outer(m, m)
    return NormalizedAdjacency(sym_normalize(A), "lp_masked")


def induced_subgraph(bundle: GraphBundle, node_set) -> GraphBundle:
    """Subgraph on ``node_set`` relabelled to 0..k-1 in ascending original-id order."""
    nodes = np.unique(np.asarray(list(node_set), dtype=np.int64))
    if nodes.size == 0:
        raise ValueError("induced_subgraph needs a nonempty node set")
    if nodes[0] < 0 or nodes[-1] >= bundle.n_nodes:
        raise ValueError("node_set contains ids outside the graph")
    remap = np.full(bundle.n_nodes, -1, dtype=np.int64)
    remap[nodes] = np.arange(nodes.size)
    if bundle.n_edges:
        mapped = remap[bundle.edges]
        keep = (mapped >= 0).all(axis=1)
        edges = mapped[keep]
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    else:
        edges = np.zeros((0, 2), dtype=np.int64)
    return GraphBundle(
        n_nodes=int(nodes.size),
        n_classes=bundle.n_classes,
        features=bundle.features[nodes].copy(),
        labels=bundle.labels[nodes].copy(),
        edges=edges,
        split=bundle.split[nodes].copy(),
        noise_mask=None if bundle.noise_mask is None else bundle.noise_mask[nodes].copy(),
    )
