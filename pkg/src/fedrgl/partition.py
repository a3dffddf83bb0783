"""Community detection and the community -> client assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .graph import TEST, TRAIN, VAL, GraphBundle

LOUVAIN_RESOLUTION = 1.0


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    client_nodes: tuple[np.ndarray, ...]
    community_to_client: dict[int, int]

    @property
    def n_clients(self) -> int:
        return len(self.client_nodes)

    def sizes(self) -> list[int]:
        return [int(c.size) for c in self.client_nodes]


def to_networkx(bundle: GraphBundle) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(bundle.n_nodes))
    G.add_edges_from(map(tuple, bundle.edges.tolist()))
    return G


def louvain(bundle: GraphBundle, seed: int) -> np.ndarray:
    """Community id per node; ids ordered by each community's smallest node."""
    G = to_networkx(bundle)
    communities = nx.community.louvain_communities(G, resolution=LOUVAIN_RESOLUTION, seed=seed)
    communities = sorted(communities, key=min)
    labels = np.empty(bundle.n_nodes, dtype=np.int64)
    for cid, members in enumerate(communities):
        labels[list(members)] = cid
    return labels


def modularity(bundle: GraphBundle, communities) -> float:
    communities = np.asarray(communities)
    groups = [set(np.flatnonzero(communities == c).tolist()) for c in np.unique(communities)]
    G = to_networkx(bundle)
    if G.number_of_edges() == 0:
        return 0.0
    return float(nx.community.modularity(G, groups, resolution=LOUVAIN_RESOLUTION))


def assign_communities(communities, n_clients: int, seed: int = 0) -> Partition:
    """Largest community first, each to the currently smallest client.

    Ties between equally large communities are ordered by community id and ties
    between equally loaded clients go to the lowest client index, so the result
    does not actually depend on ``seed``; it is accepted for interface symmetry.
    """
    communities = np.asarray(communities, dtype=np.int64)
    ids, sizes = np.unique(communities, return_counts=True)
    if ids.size < n_clients:
        raise PartitionError(
            f"only {ids.size} communities for {n_clients} clients; reduce the number of clients"
        )
    if n_clients < 1:
        raise PartitionError("need at least one client")
    order = sorted(range(ids.size), key=lambda i: (-sizes[i], ids[i]))
    loads = [0] * n_clients
    members: list[list[int]] = [[] for _ in range(n_clients)]
    mapping: dict[int, int] = {}
    for i in order:
        target = min(range(n_clients), key=lambda m: (loads[m], m))
        loads[target] += int(sizes[i])
        mapping[int(ids[i])] = target
        members[target].append(int(ids[i]))
    client_nodes = tuple(
        np.flatnonzero(np.isin(communities, np.asarray(cids, dtype=np.int64))) for cids in members
    )
    return Partition(client_nodes, mapping)


def split_nodes(bundle: GraphBundle, ratios, seed: int) -> np.ndarray:
    """Per-class stratified train/val/test tags.

    Every nonempty class keeps at least one train node.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError(f"split ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {sum(ratios)!r}")
    rng = np.random.default_rng(seed)
    split = np.empty(bundle.n_nodes, dtype="<U5")
    for c in range(bundle.n_classes):
        members = np.flatnonzero(bundle.labels == c)
        if members.size == 0:
            continue
        members = rng.permutation(members)
        n = members.size
        n_train = max(1, math.floor(n * ratios[0] + 0.5))
        n_val = min(math.floor(n * ratios[1] + 0.5), n - n_train)
        split[members[:n_train]] = TRAIN
        split[members[n_train : n_train + n_val]] = VAL
        split[members[n_train + n_val :]] = TEST
    return split
