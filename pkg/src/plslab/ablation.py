"""Ablation grid over the correction / contrastive / weighting switches."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datagen import Dataset
from .training import TrainConfig, TrainReport, run_training

# (name, switch overrides); the final row keeps the correctness weights in
# the classifier loss but drops them from the contrastive labels
ABLATION_GRID: list[tuple[str, dict]] = [
    ("baseline", dict(enable_correction=False, enable_contrastive=False, enable_w=False)),
    ("correction", dict(enable_correction=True, enable_contrastive=False, enable_w=False)),
    ("correction+w", dict(enable_correction=True, enable_contrastive=False, enable_w=True)),
    ("correction+contrastive", dict(enable_correction=True, enable_contrastive=True, enable_w=False)),
    ("full", dict(enable_correction=True, enable_contrastive=True, enable_w=True)),
    ("w-classif-only", dict(enable_correction=True, enable_contrastive=True,
                            enable_w=True, w_in_contrastive=False)),
]


@dataclass
class AblationRow:
    name: str
    overrides: dict
    seeds: list[int]
    best_accs: list[float]
    mean: float
    std: float
    reports: list[TrainReport]


def run_ablation(train_ds: Dataset, test_ds: Dataset, base: TrainConfig,
                 seeds: list[int]) -> list[AblationRow]:
    """One run per (grid row, seed); rows report mean/std best test accuracy."""
    if not seeds:
        raise ValueError("ablation needs at least one seed")
    rows = []
    for name, overrides in ABLATION_GRID:
        reports = [run_training(train_ds, test_ds,
                                replace(base, seed=seed, **overrides))
                   for seed in seeds]
        accs = [r.best_test_acc for r in reports]
        rows.append(AblationRow(name=name, overrides=overrides, seeds=list(seeds),
                                best_accs=accs, mean=float(np.mean(accs)),
                                std=float(np.std(accs)), reports=reports))
    return rows
