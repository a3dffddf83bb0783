"""Round loop: partition, corrupt, broadcast, train, aggregate, evaluate."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..graph import GraphBundle, induced_subgraph
from ..model import init_params, predict_logits
from ..noise import inject, sample_client_rates
from ..numeric import ParamSet
from ..partition import Partition, assign_communities, louvain, split_nodes
from .client import MAIN, ClientReport, ClientState, client_round
from .config import INIT, LOUVAIN, NOISE, NOISE_RATES, SPLIT, RunConfig, stream, stream_int
from .server import aggregate_entropy, aggregate_fedavg

log = logging.getLogger(__name__)


@dataclass
class RoundRecord:
    round: int
    phase: str
    aggregation: str
    test_accuracy: float
    val_accuracy: float | None
    weights: list[float]
    reports: list[ClientReport]


@dataclass
class FederationResult:
    config: RunConfig
    partition: Partition
    noise_rates: np.ndarray
    records: list[RoundRecord] = field(default_factory=list)
    final_params: ParamSet | None = None

    @property
    def final_accuracy(self) -> float:
        return self.records[-1].test_accuracy

    @property
    def best_val_accuracy(self) -> float | None:
        """Test accuracy at the round with the highest validation accuracy (earliest on ties)."""
        scored = [r for r in self.records if r.val_accuracy is not None]
        if not scored:
            return None
        best = max(scored, key=lambda r: (r.val_accuracy, -r.round))
        return best.test_accuracy

    def mean_filter_stat(self, attr: str) -> float | None:
        vals = [
            getattr(rep, attr)
            for rec in self.records
            if rec.phase == MAIN
            for rep in rec.reports
            if getattr(rep, attr) is not None
        ]
        return float(np.mean(vals)) if vals else None


def build_clients(cfg: RunConfig, bundle: GraphBundle) -> tuple[list[ClientState], Partition, np.ndarray]:
    if cfg.split_ratios is not None:
        bundle = bundle.with_split(split_nodes(bundle, cfg.split_ratios, stream_int(cfg.seed, SPLIT)))
    communities = louvain(bundle, stream_int(cfg.seed, LOUVAIN))
    partition = assign_communities(communities, cfg.n_clients, cfg.seed)
    noise_seed = cfg.noise.seed if cfg.noise.seed is not None else stream_int(cfg.seed, NOISE_RATES)
    rates = sample_client_rates(cfg.noise, cfg.n_clients, noise_seed)
    clients = []
    for m, nodes in enumerate(partition.client_nodes):
        sub = induced_subgraph(bundle, nodes)
        true_labels = sub.labels.copy()
        if cfg.noise.kind != "none":
            noisy, mask = inject(
                sub.labels, sub.train_nodes, float(rates[m]), cfg.noise.kind, sub.n_classes,
                stream(noise_seed, NOISE, m),
            )
            sub = sub.with_labels(noisy, mask)
        clients.append(ClientState.build(m, sub, true_labels))
    return clients, partition, rates


def evaluate_global(params: ParamSet, clients, which: str = "test") -> float | None:
    """Micro accuracy of ``params`` over the union of the clients' test (or val) nodes.

    A split without validation nodes gives None for ``which="val"``.
    """
    correct = total = 0
    for c in clients:
        nodes = c.bundle.test_nodes if which == "test" else c.bundle.val_nodes
        if nodes.size == 0:
            continue
        pred = predict_logits(params, c.gcn_op, c.bundle.features)[nodes].argmax(axis=1)
        correct += int((pred == c.true_labels[nodes]).sum())
        total += int(nodes.size)
    if total == 0:
        if which == "val":
            return None
        raise ValueError(f"no {which} nodes on any client")
    return correct / total


# worker-side state for the process pool
_WORKER: dict = {}


def _init_worker(clients, cfg):
    _WORKER["clients"] = clients
    _WORKER["cfg"] = cfg


def _train_client(args):
    m, params, phase, round_idx = args
    return client_round(_WORKER["clients"][m], params, phase, _WORKER["cfg"], round_idx)


def run_federation(cfg: RunConfig, bundle: GraphBundle, on_round=None) -> FederationResult:
    clients, partition, rates = build_clients(cfg, bundle)
    log.info("client sizes %s, noise rates %s", partition.sizes(), np.round(rates, 4).tolist())
    d_in = bundle.n_features
    params = init_params(d_in, cfg.hidden, bundle.n_classes, stream(cfg.seed, INIT))
    result = FederationResult(cfg, partition, rates)

    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(clients, cfg))
    try:
        for t in range(cfg.rounds):
            phase = cfg.phase(t)
            jobs = [(m, params, phase, t) for m in range(len(clients))]
            if pool is None:
                reports = [client_round(clients[m], p, ph, cfg, r) for m, p, ph, r in jobs]
            else:
                reports = list(pool.map(_train_client, jobs))
            if phase == MAIN and cfg.uses_entropy_weighting:
                params, weights = aggregate_entropy(reports, cfg.epsilon)
                how = "entropy"
            else:
                params, weights = aggregate_fedavg(reports)
                how = "fedavg"
            record = RoundRecord(
                round=t,
                phase=phase,
                aggregation=how,
                test_accuracy=evaluate_global(params, clients, "test"),
                val_accuracy=evaluate_global(params, clients, "val"),
                weights=weights.tolist(),
                reports=reports,
            )
            result.records.append(record)
            if on_round is not None:
                on_round(record)
    finally:
        if pool is not None:
            pool.shutdown()
    result.final_params = params
    return result
