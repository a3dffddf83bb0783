"""Dense reverse-mode autodiff on 2-D float64 arrays, plus SGD.

Every value is a 2-D ``Tensor``; scalars are 1x1.  Operations append a node
to the ``Tape`` that owns their inputs, and ``backward`` walks that record in
reverse.  Only the handful of primitives needed by a GCN with contrastive,
cross-entropy and JS losses are provided.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Iterable, Mapping

import numpy as np

LOG_FLOOR = 1e-12
NORM_FLOOR = 1e-12


class DimensionError(ValueError):
    """Operand shapes do not conform to the operation."""


class ContractError(ValueError):
    """A caller broke a precondition of the engine (non-scalar loss, misaligned grads...)."""


class Tensor:
    __slots__ = ("data", "grad", "tape", "parents", "backward_fn", "index", "name")

    def __init__(self, data, tape: "Tape", parents=(), backward_fn=None, name=None):
        self.data = data
        self.grad = None
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.data.shape})"


class Tape:
    """Ordered record of primitive applications.

    Nodes are appended in creation order, which is already a topological order
    because an op can only consume tensors that exist.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []

    def variable(self, value, name: str | None = None) -> Tensor:
        return Tensor(_as_matrix(value), self, name=name)

    def constant(self, value) -> Tensor:
        return Tensor(_as_matrix(value), self)

    def __len__(self) -> int:
        return len(self.nodes)


def _as_matrix(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(f"tensors are 2-D, got ndim={arr.ndim}")
    return arr


def _tape_of(*tensors: Tensor) -> Tape:
    tape = tensors[0].tape
    for t in tensors[1:]:
        if t.tape is not tape:
            raise ContractError("operands recorded on different tapes")
    return tape


def _node(data, parents, backward_fn) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value produced in forward pass")
    return Tensor(data, _tape_of(*parents), parents, backward_fn)


# ---------------------------------------------------------------- primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul {a.shape} @ {b.shape}")
    A, B = a.data, b.data
    return _node(A @ B, (a, b), lambda g: (g @ B.T, A.T @ g))


def transpose(a: Tensor) -> Tensor:
    return _node(a.data.T.copy(), (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"add {a.shape} + {b.shape}")
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"sub {a.shape} - {b.shape}")
    return _node(a.data - b.data, (a, b), lambda g: (g, -g))


def add_row(a: Tensor, row: Tensor) -> Tensor:
    """a + row, with the 1 x c ``row`` repeated down every row of ``a``."""
    if row.shape != (1, a.shape[1]):
        raise DimensionError(f"add_row {a.shape} + {row.shape}")
    return _node(a.data + row.data, (a, row), lambda g: (g, g.sum(axis=0, keepdims=True)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"mul {a.shape} * {b.shape}")
    A, B = a.data, b.data
    return _node(A * B, (a, b), lambda g: (g * B, g * A))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    """Natural log with inputs clamped to ``LOG_FLOOR``; clamped entries get zero gradient."""
    live = a.data > LOG_FLOOR
    safe = np.where(live, a.data, LOG_FLOOR)
    return _node(np.log(safe), (a,), lambda g: (np.where(live, g / safe, 0.0),))


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _node(s, (a,), back)


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return _node(np.array([[a.data.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),))


def mean_all(a: Tensor) -> Tensor:
    shape = a.shape
    n = a.data.size
    return _node(np.array([[a.data.mean()]]), (a,), lambda g: (np.full(shape, g[0, 0] / n),))


def row_sum(a: Tensor) -> Tensor:
    cols = a.shape[1]
    return _node(a.data.sum(axis=1, keepdims=True), (a,), lambda g: (np.repeat(g, cols, axis=1),))


def row_mean(a: Tensor) -> Tensor:
    cols = a.shape[1]
    return _node(a.data.mean(axis=1, keepdims=True), (a,), lambda g: (np.repeat(g, cols, axis=1) / cols,))


def gather_rows(a: Tensor, rows) -> Tensor:
    rows = np.asarray(rows, dtype=np.int64)
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, rows, g)
        return (out,)

    return _node(a.data[rows], (a,), back)


def pick(a: Tensor, rows, cols) -> Tensor:
    """Column vector of a[rows[i], cols[i]]."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.shape != cols.shape:
        raise DimensionError("pick needs equally long row and column index lists")
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, (rows, cols), g[:, 0])
        return (out,)

    return _node(a.data[rows, cols].reshape(-1, 1), (a,), back)


def masked_assign(a: Tensor, mask, value: float) -> Tensor:
    """Entries where ``mask`` is true are replaced by the constant ``value``."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != a.shape:
        raise DimensionError(f"mask {mask.shape} vs tensor {a.shape}")
    return _node(np.where(mask, value, a.data), (a,), lambda g: (np.where(mask, 0.0, g),))


def l2_normalize_rows(a: Tensor) -> Tensor:
    norms = np.sqrt((a.data**2).sum(axis=1, keepdims=True))
    live = norms > NORM_FLOOR
    n = np.where(live, norms, NORM_FLOOR)
    y = a.data / n

    def back(g):
        # rows whose norm hit the floor behave as a plain division by the floor
        proj = np.where(live, (g * y).sum(axis=1, keepdims=True), 0.0)
        return ((g - y * proj) / n,)

    return _node(y, (a,), back)


# ---------------------------------------------------------------- composites


def log_softmax_pick(logits: Tensor, rows, labels) -> Tensor:
    """log softmax(logits)[row, label] for each (row, label) pair, as a column."""
    return pick(log(softmax_rows(logits)), rows, labels)


def cross_entropy(logits: Tensor, rows, labels) -> Tensor:
    """Mean over ``rows`` of -log softmax(logits_row)[label]."""
    return scale(mean_all(log_softmax_pick(logits, rows, labels)), -1.0)


# ---------------------------------------------------------------- backward


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``.grad`` on every tape node; unreachable nodes get zeros."""
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be a 1x1 tensor, got {loss.shape}")
    if loss.tape is not tape:
        raise ContractError("loss was not recorded on this tape")
    for node in tape.nodes:
        node.grad = np.zeros_like(node.data)
    loss.grad = np.ones((1, 1))
    for node in reversed(tape.nodes[: loss.index + 1]):
        if node.backward_fn is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            parent.grad += g


# ---------------------------------------------------------------- parameters


class ParamSet:
    """Named float64 matrices in a fixed order, with a flat-vector view."""

    def __init__(self, arrays: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]]):
        items = arrays.items() if isinstance(arrays, Mapping) else arrays
        self._arrays: OrderedDict[str, np.ndarray] = OrderedDict(
            (name, _as_matrix(value)) for name, value in items
        )

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __iter__(self):
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def items(self):
        return self._arrays.items()

    def names(self) -> list[str]:
        return list(self._arrays)

    def shapes(self) -> list[tuple[int, int]]:
        return [a.shape for a in self._arrays.values()]

    @property
    def size(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def copy(self) -> "ParamSet":
        return ParamSet((k, v.copy()) for k, v in self._arrays.items())

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays.values()])

    def unflatten(self, vector) -> "ParamSet":
        """A new ParamSet with this one's layout filled from ``vector``."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.size,):
            raise ContractError(f"vector of length {vector.size} does not fit {self.size} parameters")
        out, offset = [], 0
        for name, arr in self._arrays.items():
            out.append((name, vector[offset : offset + arr.size].reshape(arr.shape).copy()))
            offset += arr.size
        return ParamSet(out)

    def attach(self, tape: Tape) -> dict[str, Tensor]:
        return {name: tape.variable(arr, name=name) for name, arr in self._arrays.items()}

    def allclose(self, other: "ParamSet", **kwargs) -> bool:
        return self.names() == other.names() and all(
            np.allclose(self[k], other[k], **kwargs) for k in self
        )


def gradients(variables: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    return {name: t.grad.copy() for name, t in variables.items()}


def value_and_grad(loss_fn: Callable[[Tape, dict[str, Tensor]], Tensor], params: ParamSet):
    """Run ``loss_fn`` on a fresh tape and return (loss value, per-parameter gradients)."""
    tape = Tape()
    variables = params.attach(tape)
    loss = loss_fn(tape, variables)
    backward(tape, loss)
    return loss.item(), gradients(variables)


def finite_difference_gradient(loss_fn: Callable[[ParamSet], float], params: ParamSet, h: float = 1e-4):
    """Central differences (f(p+h) - f(p-h)) / 2h for every scalar parameter."""
    if h <= 0:
        raise ContractError("finite-difference step must be positive")
    base = params.flatten()
    grad = np.zeros_like(base)
    for i in range(base.size):
        v = base.copy()
        v[i] = base[i] + h
        up = loss_fn(params.unflatten(v))
        v[i] = base[i] - h
        down = loss_fn(params.unflatten(v))
        grad[i] = (up - down) / (2.0 * h)
    shaped = params.unflatten(grad)
    return {name: shaped[name] for name in shaped}


def relative_error(a: Mapping[str, np.ndarray], b: Mapping[str, np.ndarray]) -> float:
    x = np.concatenate([np.ravel(a[k]) for k in a])
    y = np.concatenate([np.ravel(b[k]) for k in a])
    denom = max(np.linalg.norm(x), np.linalg.norm(y), 1e-12)
    return float(np.linalg.norm(x - y) / denom)


def sgd_step(params: ParamSet, grads: Mapping[str, np.ndarray], lr: float, weight_decay: float = 0.0) -> ParamSet:
    """p <- p - lr * (g + weight_decay * p), returned as a new ParamSet."""
    if lr <= 0:
        raise ContractError("learning rate must be positive")
    if set(grads) != set(params.names()):
        raise ContractError("gradients do not cover exactly the parameter names")
    out = []
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ContractError(f"gradient for {name!r} has shape {g.shape}, parameter {p.shape}")
        out.append((name, p - lr * (g + weight_decay * p)))
    return ParamSet(out)
