"""Dense float64 tensors with a define-by-run reverse-mode gradient tape.

Forward arithmetic runs on numpy buffers. Whenever an operand belongs to a
Graph, the operation is recorded so that backward() can replay the
vector-Jacobian products in reverse order. Graphs are rebuilt per minibatch
and must stay on a single thread; tensors without a graph are constants.
"""
from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

LOG_CLAMP = 1e-12
NORM_CLAMP = 1e-12


class ShapeError(ValueError):
    """Operand shapes violate an operation contract."""


class NumericError(ValueError):
    """Operand values violate a numeric precondition (NaN / inf)."""


class GraphError(ValueError):
    """Graph misuse: mixed graphs, non-scalar backward, missing tape."""


class Graph:
    """Tape of recorded operations.

    Nodes are appended in execution order, so every node's parents precede it
    and a single reverse sweep over the tape implements backpropagation.
    """

    def __init__(self) -> None:
        self.tensors: list[Tensor] = []
        self.edges: list[list[tuple[int, Callable[[np.ndarray], np.ndarray]]]] = []

    def __len__(self) -> int:
        return len(self.tensors)

    def register(self, tensor: "Tensor") -> int:
        self.tensors.append(tensor)
        self.edges.append([])
        return len(self.tensors) - 1


class Tensor:
    """Row-major float64 array, optionally recorded on a Graph."""

    __slots__ = ("data", "graph", "node_id", "grad")

    def __init__(self, data, graph: Graph | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.graph = graph
        self.node_id = graph.register(self) if graph is not None else None
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f", node={self.node_id}" if self.graph is not None else ""
        return f"Tensor(shape={self.shape}{tag})"


def _record(data: np.ndarray, parts: list[tuple[Tensor, Callable]]) -> Tensor:
    graph = None
    for t, _ in parts:
        if t.graph is None:
            continue
        if graph is None:
            graph = t.graph
        elif graph is not t.graph:
            raise GraphError("operands belong to different graphs")
    out = Tensor(data, graph)
    if graph is not None:
        edges = graph.edges[out.node_id]
        for t, vjp in parts:
            if t.graph is not None:
                edges.append((t.node_id, vjp))
    return out


def _check_binary(a: Tensor, b: Tensor) -> tuple[str, str]:
    # same shape, or a single-row [1,n] operand broadcast against [m,n]
    sa, sb = a.data.shape, b.data.shape
    if sa == sb:
        return "same", "same"
    if len(sa) == 2 and len(sb) == 2 and sa[1] == sb[1]:
        if sa[0] == 1 and sb[0] > 1:
            return "row", "same"
        if sb[0] == 1 and sa[0] > 1:
            return "same", "row"
    raise ShapeError(f"incompatible shapes {sa} and {sb}")


def _reduce(g: np.ndarray, kind: str) -> np.ndarray:
    return g.sum(axis=0, keepdims=True) if kind == "row" else g


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError("matmul expects 2-D tensors")
    bd = b.data.T if transpose_b else b.data
    if a.data.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul inner dims disagree: {a.data.shape} x {bd.shape}")
    out = a.data @ bd
    if transpose_b:
        parts = [(a, lambda g: g @ b.data), (b, lambda g: g.T @ a.data)]
    else:
        parts = [(a, lambda g: g @ b.data.T), (b, lambda g: a.data.T @ g)]
    return _record(out, parts)


def add(a: Tensor, b: Tensor) -> Tensor:
    ka, kb = _check_binary(a, b)
    return _record(a.data + b.data,
                   [(a, lambda g: _reduce(g, ka)), (b, lambda g: _reduce(g, kb))])


def subtract(a: Tensor, b: Tensor) -> Tensor:
    ka, kb = _check_binary(a, b)
    return _record(a.data - b.data,
                   [(a, lambda g: _reduce(g, ka)), (b, lambda g: _reduce(-g, kb))])


def multiply(a: Tensor, b: Tensor) -> Tensor:
    ka, kb = _check_binary(a, b)
    return _record(a.data * b.data,
                   [(a, lambda g: _reduce(g * b.data, ka)),
                    (b, lambda g: _reduce(g * a.data, kb))])


def power(x: Tensor, exponent: float) -> Tensor:
    out = x.data ** exponent
    return _record(out, [(x, lambda g: g * exponent * x.data ** (exponent - 1.0))])


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return _record(out, [(x, lambda g: g * out)])


def log(x: Tensor) -> Tensor:
    # inputs below LOG_CLAMP are flattened, so their gradient is zero
    clamped = np.maximum(x.data, LOG_CLAMP)
    mask = x.data > LOG_CLAMP
    return _record(np.log(clamped), [(x, lambda g: g * mask / clamped)])


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0.0
    return _record(np.where(mask, x.data, 0.0), [(x, lambda g: g * mask)])


def softmax_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError("softmax_rows expects a 2-D tensor")
    if not np.isfinite(x.data).all():
        raise NumericError("softmax_rows requires finite entries")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        return out * (g - (g * out).sum(axis=1, keepdims=True))

    return _record(out, [(x, vjp)])


def l2_normalize_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError("l2_normalize_rows expects a 2-D tensor")
    norms = np.sqrt((x.data ** 2).sum(axis=1, keepdims=True))
    ok = norms > NORM_CLAMP
    if not ok.all():
        warnings.warn("l2_normalize_rows: zero-norm row clamped", RuntimeWarning)
    safe = np.maximum(norms, NORM_CLAMP)
    out = x.data / safe

    def vjp(g):
        # clamped rows behave as x / NORM_CLAMP, a plain linear map
        return (g - ok * out * (g * out).sum(axis=1, keepdims=True)) / safe

    return _record(out, [(x, vjp)])


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[0] != b.data.shape[0]:
        raise ShapeError("concat_cols expects 2-D tensors with equal row counts")
    na = a.data.shape[1]
    out = np.concatenate([a.data, b.data], axis=1)
    return _record(out, [(a, lambda g: g[:, :na]), (b, lambda g: g[:, na:])])


def mean_rows(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError("mean_rows expects a 2-D tensor")
    n = x.data.shape[1]
    out = x.data.mean(axis=1, keepdims=True)
    return _record(out, [(x, lambda g: np.broadcast_to(g / n, x.data.shape))])


def global_mean(x: Tensor) -> Tensor:
    size = x.data.size
    out = np.asarray(x.data.mean())
    return _record(out, [(x, lambda g: np.broadcast_to(g / size, x.data.shape))])


def scale(x: Tensor, factor: float) -> Tensor:
    return _record(x.data * factor, [(x, lambda g: g * factor)])


def row_sum(x: Tensor) -> Tensor:
    return scale(mean_rows(x), float(x.data.shape[1]))


def global_sum(x: Tensor) -> Tensor:
    return scale(global_mean(x), float(x.data.size))


def backward(loss: Tensor) -> None:
    """Populate .grad for every tensor on the loss's graph (leaves included)."""
    if loss.graph is None:
        raise GraphError("backward requires a tensor recorded on a graph")
    if loss.data.size != 1:
        raise GraphError("backward requires a scalar loss")
    graph = loss.graph
    grads: list[np.ndarray | None] = [None] * len(graph)
    grads[loss.node_id] = np.ones_like(loss.data)
    for nid in range(loss.node_id, -1, -1):
        gout = grads[nid]
        if gout is None:
            continue
        for pid, vjp in graph.edges[nid]:
            contrib = vjp(gout)
            cur = grads[pid]
            grads[pid] = contrib if cur is None else cur + contrib
    for tensor, grad in zip(graph.tensors, grads):
        tensor.grad = np.zeros_like(tensor.data) if grad is None else np.asarray(grad, dtype=np.float64)
