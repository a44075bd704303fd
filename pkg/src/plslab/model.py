"""Small MLP classifier with a linear projection head into the contrastive space.

The classifier maps d -> h -> h -> C with relu and a softmax output; the
penultimate activations feed the projection head, whose output rows are
L2-normalized. Binding a model to a Graph wraps its parameters as tape
leaves so gradients can be read back after a backward pass.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import (Graph, Tensor, add, l2_normalize_rows, matmul, relu,
                     softmax_rows)

CHECKPOINT_MAGIC = b"PLSLABCK"
CHECKPOINT_VERSION = 1


@dataclass
class MlpClassifier:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w3.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def bind(self, graph: Graph | None) -> "BoundMlp":
        return BoundMlp(self, graph)


@dataclass
class ProjectionHead:
    wp: np.ndarray  # [h, p], no bias

    @property
    def proj_dim(self) -> int:
        return self.wp.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [self.wp]

    def bind(self, graph: Graph | None) -> "BoundHead":
        return BoundHead(self, graph)


class BoundMlp:
    def __init__(self, model: MlpClassifier, graph: Graph | None):
        self.leaves = [Tensor(a, graph) for a in model.arrays()]

    def forward_probs(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Class probabilities and penultimate features for a [B, d] batch."""
        w1, b1, w2, b2, w3, b3 = self.leaves
        h1 = relu(add(matmul(x, w1), b1))
        feats = relu(add(matmul(h1, w2), b2))
        logits = add(matmul(feats, w3), b3)
        return softmax_rows(logits), feats


class BoundHead:
    def __init__(self, head: ProjectionHead, graph: Graph | None):
        self.leaves = [Tensor(head.wp, graph)]

    def project(self, features: Tensor) -> Tensor:
        return l2_normalize_rows(matmul(features, self.leaves[0]))


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


def init_model(input_dim: int, hidden_dim: int, n_classes: int, proj_dim: int,
               seed) -> tuple[MlpClassifier, ProjectionHead]:
    """Seeded init; weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if min(input_dim, hidden_dim, n_classes, proj_dim) < 1:
        raise ValueError("all dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    model = MlpClassifier(
        w1=_uniform(rng, input_dim, (input_dim, hidden_dim)),
        b1=_uniform(rng, input_dim, (1, hidden_dim)),
        w2=_uniform(rng, hidden_dim, (hidden_dim, hidden_dim)),
        b2=_uniform(rng, hidden_dim, (1, hidden_dim)),
        w3=_uniform(rng, hidden_dim, (hidden_dim, n_classes)),
        b3=_uniform(rng, hidden_dim, (1, n_classes)),
    )
    head = ProjectionHead(wp=_uniform(rng, hidden_dim, (hidden_dim, proj_dim)))
    return model, head


def forward_probs(model: MlpClassifier, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluation forward pass without gradient recording."""
    probs, feats = model.bind(None).forward_probs(Tensor(features))
    return probs.data, feats.data


def project(head: ProjectionHead, features: np.ndarray) -> np.ndarray:
    return head.bind(None).project(Tensor(features)).data


class SgdMomentum:
    """SGD with classical momentum and decoupled L2 weight shrink."""

    def __init__(self, arrays: list[np.ndarray], momentum: float = 0.9,
                 weight_decay: float = 0.0):
        self.arrays = arrays
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(a) for a in arrays]

    def step(self, grads: list[np.ndarray], lr: float) -> None:
        if len(grads) != len(self.arrays):
            raise ValueError("gradient list does not match parameter list")
        for p, v, g in zip(self.arrays, self.velocity, grads):
            v *= self.momentum
            v += g
            p -= lr * v
            if self.weight_decay:
                p -= lr * self.weight_decay * p


def save_checkpoint(path, model: MlpClassifier, head: ProjectionHead) -> None:
    """Versioned header + dims + flat little-endian float64 weight arrays."""
    header = struct.pack("<8sI4I", CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
                         model.input_dim, model.hidden_dim, model.n_classes,
                         head.proj_dim)
    blobs = [a.astype("<f8").tobytes() for a in model.arrays() + head.arrays()]
    Path(path).write_bytes(header + b"".join(blobs))


def load_checkpoint(path) -> tuple[MlpClassifier, ProjectionHead]:
    raw = Path(path).read_bytes()
    magic, version, d, h, c, p = struct.unpack_from("<8sI4I", raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a plslab checkpoint")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = struct.calcsize("<8sI4I")
    shapes = [(d, h), (1, h), (h, h), (1, h), (h, c), (1, c), (h, p)]
    arrays = []
    for shape in shapes:
        count = shape[0] * shape[1]
        arrays.append(np.frombuffer(raw, dtype="<f8", count=count,
                                    offset=offset).reshape(shape).copy())
        offset += count * 8
    return MlpClassifier(*arrays[:6]), ProjectionHead(arrays[6])
