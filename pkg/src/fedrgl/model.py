"""2-layer GCN encoder, linear classifier and 2-layer projection head."""

from __future__ import annotations

import numpy as np

from . import numeric as nm
from .numeric import ParamSet, Tape, Tensor

ENCODER = ("enc_w1", "enc_b1", "enc_w2", "enc_b2")
CLASSIFIER = ("cls_w", "cls_b")
PROJECTOR = ("proj_w1", "proj_b1", "proj_w2", "proj_b2")


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_params(d_in: int, d_hid: int, n_classes: int, seed) -> ParamSet:
    if min(d_in, d_hid, n_classes) < 1:
        raise ValueError("model dimensions must be positive")
    rng = np.random.default_rng(seed)
    return ParamSet(
        [
            ("enc_w1", glorot(rng, d_in, d_hid)),
            ("enc_b1", np.zeros((1, d_hid))),
            ("enc_w2", glorot(rng, d_hid, d_hid)),
            ("enc_b2", np.zeros((1, d_hid))),
            ("cls_w", glorot(rng, d_hid, n_classes)),
            ("cls_b", np.zeros((1, n_classes))),
            ("proj_w1", glorot(rng, d_hid, d_hid)),
            ("proj_b1", np.zeros((1, d_hid))),
            ("proj_w2", glorot(rng, d_hid, d_hid)),
            ("proj_b2", np.zeros((1, d_hid))),
        ]
    )


def _const(tape: Tape, value) -> Tensor:
    return value if isinstance(value, Tensor) else tape.constant(value)


def encode(tape: Tape, A_hat, X, p: dict[str, Tensor]) -> Tensor:
    """H = A relu(A X W1 + b1) W2 + b2."""
    A = _const(tape, A_hat)
    X = _const(tape, X)
    if A.shape[0] != A.shape[1] or A.shape[1] != X.shape[0]:
        raise nm.DimensionError(f"adjacency {A.shape} does not match features {X.shape}")
    h = nm.relu(nm.add_row(nm.matmul(A, nm.matmul(X, p["enc_w1"])), p["enc_b1"]))
    return nm.add_row(nm.matmul(A, nm.matmul(h, p["enc_w2"])), p["enc_b2"])


def classify(H: Tensor, p: dict[str, Tensor]) -> Tensor:
    return nm.add_row(nm.matmul(H, p["cls_w"]), p["cls_b"])


def project(H: Tensor, p: dict[str, Tensor]) -> Tensor:
    h = nm.relu(nm.add_row(nm.matmul(H, p["proj_w1"]), p["proj_b1"]))
    return nm.add_row(nm.matmul(h, p["proj_w2"]), p["proj_b2"])


def predict_logits(params: ParamSet, A_hat: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Forward pass without keeping the tape around."""
    tape = Tape()
    p = params.attach(tape)
    return classify(encode(tape, A_hat, X, p), p).data


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
