"""Evaluation primitives: accuracy, rank-based AUC, retrieval tasks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .datagen import Provenance

if TYPE_CHECKING:  # pragma: no cover
    from .datagen import Dataset
    from .training import EpochState


class UndefinedMetricError(ValueError):
    """The metric is not defined on the given inputs (e.g. one class only)."""


@dataclass
class RetrievalTask:
    scores: np.ndarray      # higher score = predicted positive
    positives: np.ndarray   # bool flags


def _average_ranks(values: np.ndarray) -> np.ndarray:
    # ranks 1..N, ties share the average of their rank block
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts
    return ((starts + ends + 1) / 2.0)[inverse]


def auc(scores, positives) -> float:
    """Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie)."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives, dtype=bool)
    if s.ndim != 1 or s.shape != pos.shape:
        raise ValueError("scores and positives must be matching 1-D arrays")
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    ranks = _average_ranks(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(predictions, labels) -> float:
    """Fraction of argmax matches; predictions may be [N, C] scores or [N] ids."""
    p = np.asarray(predictions)
    l = np.asarray(labels)
    if p.shape[0] != l.shape[0]:
        raise ValueError("predictions and labels differ in length")
    if p.shape[0] == 0:
        raise ValueError("accuracy of an empty input is undefined")
    ids = p.argmax(axis=1) if p.ndim == 2 else p
    return float(np.mean(ids == l))


def pseudo_correctness(state: "EpochState", dataset: "Dataset") -> RetrievalTask:
    """Retrieval of correctly guessed pseudo-labels among detected-noisy
    in-distribution samples; OOD samples have no correct label and are
    excluded. Scores are negated pseudo-losses so higher = predicted-correct."""
    mask = (~state.clean_mask) & (dataset.provenance == Provenance.ID_NOISE)
    if not mask.any():
        raise UndefinedMetricError("no detected-noisy in-distribution samples")
    guesses = state.pseudo_label[mask].argmax(axis=1)
    return RetrievalTask(scores=-state.pseudo_loss[mask],
                         positives=guesses == dataset.true_labels[mask])


def sign_test_pvalue(wins: int, losses: int) -> float:
    """One-sided exact binomial p-value for `wins` out of wins+losses
    non-tied paired comparisons under the fair-coin null."""
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n
