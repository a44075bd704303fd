"""Training objectives: weighted mixup cross-entropy, the interpolated
contrastive loss, and the class-balance regularizer.

Labels, correctness weights and mixing coefficients are plain numpy
constants; only model/head activations carry gradients.
"""
from __future__ import annotations

import warnings

import numpy as np

from .model import BoundHead, BoundMlp
from .tensor import (Tensor, add, global_mean, global_sum, log, matmul,
                     multiply, row_sum, scale, softmax_rows)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def harden_rows(y: np.ndarray) -> np.ndarray:
    """One-hot at the row argmax; ties break to the lowest index."""
    return one_hot(y.argmax(axis=1), y.shape[1])


def mixup_batch(x: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float,
                perm: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Convex combination with one partner permutation and one lambda per batch."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    mix = lambda a: lam * a + (1.0 - lam) * a[perm]
    return mix(x), mix(y), mix(w)


def classification_loss(probs: Tensor, y_mix: np.ndarray, w_mix: np.ndarray) -> Tensor:
    """Weight-normalized cross-entropy: sum_i w_i * ce_i / sum_i w_i."""
    total_w = float(np.sum(w_mix))
    if total_w <= 0.0:
        warnings.warn("classification_loss: all mixup weights are zero",
                      RuntimeWarning)
        return Tensor(np.zeros(()))
    ce = scale(row_sum(multiply(Tensor(y_mix), log(probs))), -1.0)  # [B, 1]
    weighted = multiply(Tensor(np.asarray(w_mix, dtype=np.float64).reshape(-1, 1)), ce)
    return scale(global_sum(weighted), 1.0 / total_w)


def build_contrastive_labels(y_onehot: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Interpolated contrastive label rows [w_i * y_i || (1 - w_i) * e_i].

    The positional one-hot makes an untrusted sample its own class, so it is
    only pulled toward its augmented view; rows sum to 1 for one-hot y."""
    b = y_onehot.shape[0]
    w = np.asarray(w, dtype=np.float64).reshape(-1, 1)
    return np.concatenate([w * y_onehot, (1.0 - w) * np.eye(b)], axis=1)


def contrastive_loss(x_weak: np.ndarray, x_strong: np.ndarray, y_cont: np.ndarray,
                     beta: float, perm: np.ndarray, model: BoundMlp,
                     head: BoundHead, temperature: float) -> Tensor:
    """Row-wise cross-entropy between label similarities and scaled embedding
    similarities of a mixed weak view against the strong view."""
    b = x_weak.shape[0]
    if b == 1:
        warnings.warn("contrastive_loss: single-sample batch, only the self "
                      "pair is a positive", RuntimeWarning)
    x_mix = beta * x_weak + (1.0 - beta) * x_weak[perm]
    y_mix = beta * y_cont + (1.0 - beta) * y_cont[perm]
    label_sim = y_mix @ y_mix.T
    denom = label_sim.sum(axis=1, keepdims=True)
    coeff = np.divide(label_sim, denom, out=np.zeros_like(label_sim),
                      where=denom > 0.0)
    _, feats_mix = model.forward_probs(Tensor(x_mix))
    _, feats_strong = model.forward_probs(Tensor(x_strong))
    logits = scale(matmul(head.project(feats_mix), head.project(feats_strong),
                          transpose_b=True), 1.0 / temperature)
    log_probs = log(softmax_rows(logits))
    return scale(global_mean(multiply(Tensor(coeff), log_probs)), -float(b))


def class_balance_reg(probs: Tensor) -> Tensor:
    """KL(uniform || batch-mean prediction); zero iff the mean is uniform."""
    b, n_classes = probs.data.shape
    if b == 0:
        raise ValueError("class_balance_reg of an empty batch is undefined")
    mean_pred = scale(matmul(Tensor(np.ones((1, b))), probs), 1.0 / b)
    return add(scale(global_mean(log(mean_pred)), -1.0),
               Tensor(np.asarray(np.log(1.0 / n_classes))))
