"""Local training on one client subgraph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numeric as nm
from ..contrast import augment, contrastive_loss, js_loss, pseudo_labels, pseudo_loss
from ..filtering import FilterOutcome, corrected_lp_init, dual_filter, label_propagate
from ..graph import GraphBundle, gcn_normalize, masked_lp_normalize
from ..model import classify, encode, predict_logits, project, softmax
from ..numeric import LOG_FLOOR, ParamSet, Tape
from .config import VIEW, RunConfig, stream

WARMUP, MAIN = "warmup", "main"


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ClientState:
    """Fixed per-client data; only the model parameters change between rounds.

    ``bundle.labels`` holds the (possibly corrupted) training labels,
    ``true_labels`` the uncorrupted ones used for evaluation and diagnostics.
    """

    client_id: int
    bundle: GraphBundle
    true_labels: np.ndarray
    gcn_op: np.ndarray
    lp_op: np.ndarray

    @classmethod
    def build(cls, client_id: int, bundle: GraphBundle, true_labels) -> "ClientState":
        if bundle.train_nodes.size == 0:
            raise ValueError(f"client {client_id} has no training nodes")
        if bundle.unlabeled_nodes.size == 0:
            raise ValueError(f"client {client_id} has no val/test nodes to measure predictive entropy on")
        return cls(
            client_id,
            bundle,
            np.asarray(true_labels, dtype=np.int64),
            gcn_normalize(bundle).matrix,
            masked_lp_normalize(bundle, bundle.train_mask).matrix,
        )


@dataclass
class EpochStats:
    losses: dict[str, float]
    n_pseudo: int = 0
    pseudo_confidence: float | None = None
    pseudo_accuracy: float | None = None


@dataclass
class ClientReport:
    client_id: int
    params: ParamSet
    n_nodes: int
    entropy: float
    phase: str
    n_train: int
    n_clean: int
    n_clean_global: int
    n_clean_structural: int
    n_noisy: int
    filter_precision: float | None = None
    filter_recall: float | None = None
    epochs: list[EpochStats] = field(default_factory=list)

    @property
    def train_loss(self) -> float:
        return self.epochs[-1].losses["total"]

    @property
    def ce_loss(self) -> float:
        return self.epochs[-1].losses["ce"]


def predictive_entropy(params: ParamSet, bundle: GraphBundle, gcn_op: np.ndarray | None = None) -> float:
    """Mean over val+test nodes of -(1/C) sum_c p_c log p_c."""
    nodes = bundle.unlabeled_nodes
    if nodes.size == 0:
        raise ValueError("predictive entropy needs val/test nodes")
    if gcn_op is None:
        gcn_op = gcn_normalize(bundle).matrix
    probs = softmax(predict_logits(params, gcn_op, bundle.features)[nodes])
    per_node = -(probs * np.log(np.maximum(probs, LOG_FLOOR))).sum(axis=1) / bundle.n_classes
    return float(per_node.mean())


def run_filter(state: ClientState, params: ParamSet, cfg: RunConfig) -> FilterOutcome:
    b = state.bundle
    train = b.train_nodes
    use_global = cfg.enabled("global-view")
    use_structural = cfg.enabled("structural-view")
    if not (use_global or use_structural):
        return dual_filter(None, None, b.labels, train, cfg.phi1, cfg.phi2, False, False)
    logits = predict_logits(params, state.gcn_op, b.features)
    soft = None
    if use_structural:
        Y0, agree = corrected_lp_init(logits, b.labels, train)
        soft = label_propagate(state.lp_op, Y0, cfg.lp_alpha, cfg.lp_steps, agree, clamp=cfg.lp_clamp)
    return dual_filter(logits, soft, b.labels, train, cfg.phi1, cfg.phi2, use_global, use_structural)


def _term(name: str, build):
    try:
        return build()
    except FloatingPointError as exc:
        raise TrainingError(f"non-finite value while computing the {name} loss term") from exc


def local_loss(tape: Tape, p, state: ClientState, cfg: RunConfig, phase: str, outcome: FilterOutcome, round_idx: int, epoch: int):
    """Assemble this epoch's objective; returns (loss tensor, EpochStats)."""
    b = state.bundle
    clean = outcome.clean
    logits = _term("ce", lambda: classify(encode(tape, state.gcn_op, b.features, p), p))
    if clean.size:
        ce = _term("ce", lambda: nm.cross_entropy(logits, clean, b.labels[clean]))
    else:
        ce = nm.scale(nm.sum_all(logits), 0.0)
    terms = {"ce": ce}
    stats = EpochStats(losses={})

    extras = [c for c in ("contrastive", "pseudo", "js") if cfg.enabled(c)]
    if phase == MAIN and extras:
        heads = []
        for view in (1, 2):
            v = augment(b, cfg.p_edge_drop, cfg.p_feat_mask, stream(cfg.seed, VIEW, state.client_id, round_idx, epoch, view))
            H = _term("view", lambda: encode(tape, v.gcn_operator(b.n_nodes).matrix, v.features, p))
            heads.append(H)
        H1, H2 = heads
        if cfg.enabled("contrastive"):
            terms["cl"] = _term("cl", lambda: contrastive_loss(project(H1, p), project(H2, p), cfg.tau))
        if cfg.enabled("pseudo") or cfg.enabled("js"):
            P1, P2 = classify(H1, p), classify(H2, p)
            ps = pseudo_labels(P1, P2, outcome.noisy, cfg.gamma)
            stats.n_pseudo = len(ps)
            if len(ps):
                stats.pseudo_confidence = float(ps.confidence.mean())
                stats.pseudo_accuracy = ps.accuracy(state.true_labels)
            if cfg.enabled("pseudo"):
                terms["p"] = _term("p", lambda: pseudo_loss(P1, P2, ps))
            if cfg.enabled("js"):
                terms["js"] = _term(
                    "js", lambda: js_loss(nm.softmax_rows(logits), nm.softmax_rows(P1), nm.softmax_rows(P2), ps)
                )

    weights = {"ce": 1.0, "cl": cfg.lambda_cl, "p": cfg.lambda_p, "js": cfg.lambda_js}
    total = terms["ce"]
    for name, t in terms.items():
        if name != "ce":
            total = nm.add(total, nm.scale(t, weights[name]))
    for name, t in terms.items():
        value = t.item()
        if not np.isfinite(value):
            raise TrainingError(f"non-finite {name} loss on client {state.client_id}")
        stats.losses[name] = value
    stats.losses["total"] = total.item()
    return total, stats


def client_round(state: ClientState, global_params: ParamSet, phase: str, cfg: RunConfig, round_idx: int) -> ClientReport:
    if phase not in (WARMUP, MAIN):
        raise ValueError(f"unknown phase {phase!r}")
    b = state.bundle
    params = global_params.copy()
    if phase == MAIN:
        outcome = run_filter(state, params, cfg)
    else:
        train = b.train_nodes
        empty = np.zeros(0, dtype=np.int64)
        outcome = FilterOutcome(train, train, train, train, empty, None, None)

    epochs = []
    for epoch in range(cfg.local_epochs):
        tape = Tape()
        p = params.attach(tape)
        loss, stats = local_loss(tape, p, state, cfg, phase, outcome, round_idx, epoch)
        nm.backward(tape, loss)
        params = nm.sgd_step(params, nm.gradients(p), cfg.lr, cfg.weight_decay)
        epochs.append(stats)

    precision = recall = None
    if phase == MAIN and (cfg.enabled("global-view") or cfg.enabled("structural-view")):
        precision, recall = outcome.precision_recall(b.noise_mask)
    return ClientReport(
        client_id=state.client_id,
        params=params,
        n_nodes=b.n_nodes,
        entropy=predictive_entropy(params, b, state.gcn_op),
        phase=phase,
        n_train=int(outcome.train_nodes.size),
        n_clean=int(outcome.clean.size),
        n_clean_global=int(outcome.clean_global.size),
        n_clean_structural=int(outcome.clean_structural.size),
        n_noisy=int(outcome.noisy.size),
        filter_precision=precision,
        filter_recall=recall,
        epochs=epochs,
    )
