"""Two-stage noise detection and the confidence-weighted training loop.

Each post-warmup epoch starts with a scan of the full training set: the
per-sample small loss feeds a Gaussian mixture whose low-mode posterior
flags clean samples; pseudo-labels are guessed from two weak views and the
pseudo-loss (cross-entropy between the guess and the unaugmented prediction)
feeds a second mixture whose low-mode posterior becomes the correctness
weight w. Minibatches then train on corrected labels with weighted mixup
cross-entropy plus the interpolated contrastive objective.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import losses
from .datagen import STRONG, WEAK, Dataset, Provenance, augment_batch
from .gmm import fit_gmm_1d, posterior_low_batch
from .metrics import UndefinedMetricError, accuracy, auc, pseudo_correctness
from .model import (MlpClassifier, ProjectionHead, SgdMomentum, forward_probs,
                    init_model)
from .tensor import LOG_CLAMP, Graph, Tensor, add, backward, scale

# spawn keys for the per-purpose rng streams
_STREAM_INIT = 0
_STREAM_SCAN = 1
_STREAM_TRAIN = 2

SNAPSHOT_EVERY = 10


@dataclass
class TrainConfig:
    epochs: int = 60
    warmup_epochs: int = 10
    batch_size: int = 128
    lr0: float = 0.05
    weight_decay: float = 5e-5
    momentum: float = 0.9
    gmm_threshold: float = 0.95       # drop to 0.5 under extreme ID noise
    pseudo_exponent: float = 2.0
    contrastive_temperature: float = 0.2
    enable_correction: bool = True
    enable_contrastive: bool = True
    enable_w: bool = True
    w_in_contrastive: bool = True     # False = weights in the classifier loss only
    w_selection: str = "gmm"          # "gmm" or "threshold"
    w_threshold: float = 0.95
    class_reg_weight: float = 0.0
    hidden_dim: int = 64
    proj_dim: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < self.gmm_threshold <= 1.0:
            raise ValueError("gmm_threshold must lie in (0, 1]")
        if self.pseudo_exponent <= 0.0:
            raise ValueError("pseudo_exponent must be positive")
        if self.contrastive_temperature <= 0.0:
            raise ValueError("contrastive_temperature must be positive")
        if self.warmup_epochs > self.epochs:
            raise ValueError("warmup_epochs cannot exceed epochs")
        if self.w_selection not in ("gmm", "threshold"):
            raise ValueError("w_selection must be 'gmm' or 'threshold'")


@dataclass
class EpochState:
    """Per-sample scan results for one epoch (model state at epoch start)."""

    small_loss: np.ndarray    # [N]
    clean_mask: np.ndarray    # [N] bool
    pseudo_label: np.ndarray  # [N, C], max-normalized rows
    pseudo_loss: np.ndarray   # [N]
    w: np.ndarray             # [N] in [0, 1]; 1 on detected-clean samples
    confidence: np.ndarray    # [N] max of the averaged weak-view prediction


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    l_classif: float
    l_cont: float
    train_acc: float
    test_acc: float
    noise_auc: float
    pseudo_auc: float
    frac_detected_noisy: float
    mean_w: float
    mean_w_ood: float = math.nan
    mean_w_id_correct: float = math.nan


@dataclass
class TrainReport:
    config: TrainConfig
    epochs: list[EpochMetrics]
    best_test_acc: float
    final_test_acc: float
    best_epoch: int
    model: MlpClassifier
    head: ProjectionHead
    wall_clock_s: float
    snapshots: list[tuple[int, EpochState]] = field(default_factory=list)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _standardize(train_ds: Dataset, test_ds: Dataset):
    """Center and scalar-scale features from train statistics.

    Keeps network inputs O(1) even when replacement noise sits far from the
    class blobs; the affine is folded back into the first layer afterwards,
    so returned models operate on raw features."""
    mean = train_ds.features.mean(axis=0)
    scale = float(train_ds.features.std())
    if not np.isfinite(scale) or scale < 1e-12:
        scale = 1.0

    def apply(ds: Dataset) -> Dataset:
        return Dataset((ds.features - mean) / scale, ds.given_labels,
                       ds.true_labels, ds.provenance, ds.n_classes,
                       ds.class_std / scale, None)

    return apply(train_ds), apply(test_ds), mean, scale


def _fold_standardization(model: MlpClassifier, mean: np.ndarray,
                          scale: float) -> MlpClassifier:
    """Equivalent model on raw features: x @ (w1/s) + (b1 - (mean/s) @ w1)."""
    return MlpClassifier(w1=model.w1 / scale,
                         b1=model.b1 - ((mean / scale) @ model.w1)[None, :],
                         w2=model.w2.copy(), b2=model.b2.copy(),
                         w3=model.w3.copy(), b3=model.b3.copy())


def cosine_lr(epoch: int, config: TrainConfig) -> float:
    """lr0 through warmup, then a half-cosine decay toward zero."""
    if not 0 <= epoch < config.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {config.epochs})")
    if epoch < config.warmup_epochs:
        return config.lr0
    span = config.epochs - config.warmup_epochs
    return config.lr0 * 0.5 * (1.0 + math.cos(math.pi * (epoch - config.warmup_epochs) / span))


def _small_loss_from_probs(probs: np.ndarray, given_labels: np.ndarray) -> np.ndarray:
    picked = probs[np.arange(len(given_labels)), given_labels]
    return -np.log(np.maximum(picked, LOG_CLAMP))


def small_loss_scan(model: MlpClassifier, dataset: Dataset) -> np.ndarray:
    """Cross-entropy of the unaugmented prediction against the given label."""
    probs, _ = forward_probs(model, dataset.features)
    return _small_loss_from_probs(probs, dataset.given_labels)


def detect_noise(small_losses: np.ndarray, threshold: float) -> np.ndarray:
    """Clean mask: posterior of the low-loss mode above the threshold.

    A degenerate loss distribution marks everything clean."""
    if len(small_losses) < 10:
        raise ValueError("detect_noise needs at least 10 samples")
    fit = fit_gmm_1d(small_losses)
    if fit.degenerate:
        return np.ones(len(small_losses), dtype=bool)
    return posterior_low_batch(fit, small_losses) > threshold


def _sharpen(avg_probs: np.ndarray, exponent: float) -> np.ndarray:
    y = avg_probs ** exponent
    return y / y.max(axis=1, keepdims=True)


def guess_pseudo_labels(model: MlpClassifier, features: np.ndarray, exponent: float,
                        seed, class_std: float = 1.0) -> np.ndarray:
    """Average predictions over two weak views, sharpen, max-normalize."""
    rng = np.random.default_rng(seed)
    p1, _ = forward_probs(model, augment_batch(features, WEAK, rng, class_std))
    p2, _ = forward_probs(model, augment_batch(features, WEAK, rng, class_std))
    return _sharpen(0.5 * (p1 + p2), exponent)


def pseudo_loss(model: MlpClassifier, features: np.ndarray,
                pseudo_labels: np.ndarray) -> np.ndarray:
    """Cross-entropy of the unaugmented prediction against the pseudo-label."""
    probs, _ = forward_probs(model, features)
    return _pseudo_loss_from_probs(probs, pseudo_labels)


def _pseudo_loss_from_probs(probs: np.ndarray, pseudo_labels: np.ndarray) -> np.ndarray:
    return -(pseudo_labels * np.log(np.maximum(probs, LOG_CLAMP))).sum(axis=1)


def compute_w(pseudo_losses: np.ndarray, clean_mask: np.ndarray) -> np.ndarray:
    """Correctness weights: mixture posterior of the low pseudo-loss mode,
    fitted over detected-noisy samples only; clean samples get w = 1.

    Fewer than 10 noisy samples skips correction (their w is 0); a
    degenerate pseudo-loss distribution trusts every guess (w = 1)."""
    w = np.ones(len(pseudo_losses))
    noisy = ~clean_mask
    n_noisy = int(noisy.sum())
    if n_noisy == 0:
        return w
    if n_noisy < 10:
        w[noisy] = 0.0
        return w
    fit = fit_gmm_1d(pseudo_losses[noisy])
    w[noisy] = posterior_low_batch(fit, pseudo_losses[noisy])
    return w


def threshold_w(confidence: np.ndarray, clean_mask: np.ndarray,
                threshold: float) -> np.ndarray:
    """Fixed-threshold alternative: keep a guess iff its confidence exceeds
    the threshold; clean samples get w = 1."""
    w = np.ones(len(confidence))
    noisy = ~clean_mask
    w[noisy] = (confidence[noisy] > threshold).astype(np.float64)
    return w


def scan_epoch(model: MlpClassifier, dataset: Dataset, config: TrainConfig,
               epoch: int) -> EpochState:
    """Full-dataset detection pass with the model state at epoch start."""
    probs, _ = forward_probs(model, dataset.features)
    small = _small_loss_from_probs(probs, dataset.given_labels)
    clean = detect_noise(small, config.gmm_threshold)

    rng = _rng(config.seed, _STREAM_SCAN, epoch)
    p1, _ = forward_probs(model, augment_batch(dataset.features, WEAK, rng,
                                               dataset.class_std))
    p2, _ = forward_probs(model, augment_batch(dataset.features, WEAK, rng,
                                               dataset.class_std))
    avg = 0.5 * (p1 + p2)
    pseudo = _sharpen(avg, config.pseudo_exponent)
    ploss = _pseudo_loss_from_probs(probs, pseudo)
    if config.w_selection == "threshold":
        w = threshold_w(avg.max(axis=1), clean, config.w_threshold)
    else:
        w = compute_w(ploss, clean)
    return EpochState(small_loss=small, clean_mask=clean, pseudo_label=pseudo,
                      pseudo_loss=ploss, w=w, confidence=avg.max(axis=1))


def train_epoch(model: MlpClassifier, head: ProjectionHead, optimizer: SgdMomentum,
                dataset: Dataset, state: EpochState | None, config: TrainConfig,
                epoch: int) -> tuple[float, float]:
    """One pass over shuffled minibatches; returns mean (l_classif, l_cont).

    state is None during warmup: plain mixup cross-entropy on given labels.
    The last incomplete minibatch is dropped so the contrastive label width
    stays fixed within the epoch."""
    n = len(dataset)
    bs = min(config.batch_size, n)
    n_batches = n // bs
    if n_batches == 0:
        return math.nan, math.nan
    lr = cosine_lr(epoch, config)
    rng = _rng(config.seed, _STREAM_TRAIN, epoch)
    order = rng.permutation(n)
    n_classes = dataset.n_classes
    warmup = state is None
    contrastive = (not warmup) and config.enable_contrastive

    sum_classif = 0.0
    sum_cont = 0.0
    for b in range(n_batches):
        idx = order[b * bs:(b + 1) * bs]
        x = dataset.features[idx]
        y_given = losses.one_hot(dataset.given_labels[idx], n_classes)
        x_weak = augment_batch(x, WEAK, rng, dataset.class_std)

        if warmup:
            y_eff = y_given
            w = np.ones(bs)
        else:
            if config.enable_correction:
                x_weak2 = augment_batch(x, WEAK, rng, dataset.class_std)
                p1, _ = forward_probs(model, x_weak)
                p2, _ = forward_probs(model, x_weak2)
                guessed = _sharpen(0.5 * (p1 + p2), config.pseudo_exponent)
                noisy = ~state.clean_mask[idx]
                y_eff = y_given.copy()
                y_eff[noisy] = guessed[noisy]
            else:
                y_eff = y_given
            w = state.w[idx] if config.enable_w else np.ones(bs)

        graph = Graph()
        bound_model = model.bind(graph)
        bound_head = head.bind(graph)

        lam = float(rng.uniform())
        perm = rng.permutation(bs)
        x_mix, y_mix, w_mix = losses.mixup_batch(x_weak, y_eff, w, lam, perm)
        probs_mix, _ = bound_model.forward_probs(Tensor(x_mix))
        l_classif = losses.classification_loss(probs_mix, y_mix, w_mix)
        total = l_classif
        if config.class_reg_weight > 0.0:
            total = add(total, scale(losses.class_balance_reg(probs_mix),
                                     config.class_reg_weight))

        l_cont = None
        if contrastive:
            w_cont = w if config.w_in_contrastive else np.ones(bs)
            y_cont = losses.build_contrastive_labels(losses.harden_rows(y_eff), w_cont)
            beta = float(rng.uniform())
            perm2 = rng.permutation(bs)
            x_strong = augment_batch(x, STRONG, rng, dataset.class_std)
            l_cont = losses.contrastive_loss(x_weak, x_strong, y_cont, beta, perm2,
                                             bound_model, bound_head,
                                             config.contrastive_temperature)
            total = add(total, l_cont)

        backward(total)
        grads = [t.grad for t in bound_model.leaves + bound_head.leaves]
        optimizer.step(grads, lr)

        sum_classif += float(l_classif.data)
        if l_cont is not None:
            sum_cont += float(l_cont.data)

    return (sum_classif / n_batches,
            sum_cont / n_batches if contrastive else math.nan)


def _safe_auc(scores, positives) -> float:
    try:
        return auc(scores, positives)
    except UndefinedMetricError:
        return math.nan


def run_training(train_ds: Dataset, test_ds: Dataset, config: TrainConfig) -> TrainReport:
    """Full training run with per-epoch metrics and pseudo-loss snapshots."""
    start = time.perf_counter()
    train_ds, test_ds, feat_mean, feat_scale = _standardize(train_ds, test_ds)
    model, head = init_model(train_ds.dim, config.hidden_dim, train_ds.n_classes,
                             config.proj_dim, _rng(config.seed, _STREAM_INIT))
    optimizer = SgdMomentum(model.arrays() + head.arrays(), config.momentum,
                            config.weight_decay)
    truly_noisy = train_ds.provenance != Provenance.CLEAN
    rows: list[EpochMetrics] = []
    snapshots: list[tuple[int, EpochState]] = []

    for epoch in range(config.epochs):
        lr = cosine_lr(epoch, config)
        if epoch >= config.warmup_epochs:
            state = scan_epoch(model, train_ds, config, epoch)
            small = state.small_loss
        else:
            state = None
            small = small_loss_scan(model, train_ds)
        noise_auc = _safe_auc(small, truly_noisy)

        if state is not None:
            try:
                task = pseudo_correctness(state, train_ds)
                pseudo_auc = _safe_auc(task.scores, task.positives)
            except UndefinedMetricError:
                pseudo_auc = math.nan
            frac_noisy = float(1.0 - state.clean_mask.mean())
            mean_w = float(state.w.mean())
            ood = train_ds.provenance == Provenance.OOD_NOISE
            id_correct = ((train_ds.provenance == Provenance.ID_NOISE)
                          & (state.pseudo_label.argmax(axis=1) == train_ds.true_labels))
            mean_w_ood = float(state.w[ood].mean()) if ood.any() else math.nan
            mean_w_idc = float(state.w[id_correct].mean()) if id_correct.any() else math.nan
        else:
            pseudo_auc = frac_noisy = mean_w = mean_w_ood = mean_w_idc = math.nan

        l_classif, l_cont = train_epoch(model, head, optimizer, train_ds, state,
                                        config, epoch)

        train_probs, _ = forward_probs(model, train_ds.features)
        test_probs, _ = forward_probs(model, test_ds.features)
        rows.append(EpochMetrics(
            epoch=epoch, lr=lr, l_classif=l_classif, l_cont=l_cont,
            train_acc=accuracy(train_probs, train_ds.true_labels),
            test_acc=accuracy(test_probs, test_ds.true_labels),
            noise_auc=noise_auc, pseudo_auc=pseudo_auc,
            frac_detected_noisy=frac_noisy, mean_w=mean_w,
            mean_w_ood=mean_w_ood, mean_w_id_correct=mean_w_idc))

        if state is not None and ((epoch - config.warmup_epochs) % SNAPSHOT_EVERY == 0
                                  or epoch == config.epochs - 1):
            snapshots.append((epoch, state))

    best_epoch = int(np.argmax([r.test_acc for r in rows]))
    return TrainReport(config=config, epochs=rows,
                       best_test_acc=rows[best_epoch].test_acc,
                       final_test_acc=rows[-1].test_acc,
                       best_epoch=best_epoch,
                       model=_fold_standardization(model, feat_mean, feat_scale),
                       head=head,
                       wall_clock_s=time.perf_counter() - start,
                       snapshots=snapshots)


def with_overrides(config: TrainConfig, **overrides) -> TrainConfig:
    return replace(config, **overrides)
