"""Synthetic classification datasets with ground-truth noise provenance.

Gaussian class blobs stand in for image datasets; label corruption mirrors
the usual noise regimes: in-distribution label flips and out-of-distribution
feature replacement. Weak/strong augmentations are vector-space analogs of
the image transforms (small jitter vs. jitter + scaling + coordinate
dropout), keeping the asymmetry the detection stages rely on.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SYMMETRIC = "SYMMETRIC"
ASYMMETRIC = "ASYMMETRIC"
WEAK = "WEAK"
STRONG = "STRONG"

OOD_LABEL = -1
WEAK_SIGMA_FACTOR = 0.1
STRONG_SIGMA_FACTOR = 0.3
STRONG_SCALE_RANGE = (0.8, 1.2)
STRONG_DROPOUT_P = 0.1


class ConfigError(ValueError):
    """Invalid dataset or noise configuration."""


class Provenance(enum.IntEnum):
    CLEAN = 0
    ID_NOISE = 1
    OOD_NOISE = 2


@dataclass
class OodParams:
    """Placement of the replacement feature distribution.

    offset_sigmas: distance (in units of class_std) from the replacement mean
    to the nearest class mean. std_factor: replacement std / class std.
    """

    offset_sigmas: float = 20.0
    std_factor: float = 2.0


OOD_PRESETS = {
    "far": OodParams(offset_sigmas=20.0),
    "web": OodParams(offset_sigmas=5.0),
}


@dataclass
class Dataset:
    features: np.ndarray       # [N, d]
    given_labels: np.ndarray   # [N] int64
    true_labels: np.ndarray    # [N] int64, OOD_LABEL for replaced samples
    provenance: np.ndarray     # [N] int64 of Provenance
    n_classes: int
    class_std: float = 1.0
    class_means: np.ndarray | None = None

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def copy(self) -> "Dataset":
        return Dataset(self.features.copy(), self.given_labels.copy(),
                       self.true_labels.copy(), self.provenance.copy(),
                       self.n_classes, self.class_std,
                       None if self.class_means is None else self.class_means.copy())


def _circle_means(n_classes: int, dim: int, separation: float) -> np.ndarray:
    # adjacent means sit exactly `separation` apart on a circle in dims 0-1
    radius = separation / (2.0 * np.sin(np.pi / n_classes))
    means = np.zeros((n_classes, dim))
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    means[:, 0] = radius * np.cos(angles)
    means[:, 1] = radius * np.sin(angles)
    return means


def make_blobs(n_classes: int, dim: int, n_per_class: int, separation: float,
               seed, class_std: float = 1.0,
               n_test_per_class: int | None = None) -> tuple[Dataset, Dataset]:
    """Balanced Gaussian blobs; returns (train, test) with clean labels."""
    if n_classes < 2 or dim < 2:
        raise ConfigError("need n_classes >= 2 and dim >= 2")
    if n_per_class < 2:
        raise ConfigError("need n_per_class >= 2")
    if separation <= 0:
        raise ConfigError("separation must be positive")
    if n_test_per_class is None:
        n_test_per_class = max(1, n_per_class // 5)
    rng = np.random.default_rng(seed)
    means = _circle_means(n_classes, dim, separation)

    def draw(n_each: int) -> Dataset:
        feats = np.concatenate([means[c] + rng.normal(0.0, class_std, (n_each, dim))
                                for c in range(n_classes)])
        labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_each)
        return Dataset(feats, labels.copy(), labels.copy(),
                       np.zeros(n_each * n_classes, dtype=np.int64),
                       n_classes, class_std, means.copy())

    return draw(n_per_class), draw(n_test_per_class)


def inject_id_noise(dataset: Dataset, r_in: float, mode: str = SYMMETRIC,
                    seed=0) -> Dataset:
    """Flip given labels of round(r_in * N) uniformly chosen samples."""
    if not 0.0 <= r_in <= 1.0:
        raise ConfigError("r_in must lie in [0, 1]")
    if mode not in (SYMMETRIC, ASYMMETRIC):
        raise ConfigError(f"unknown id noise mode {mode!r}")
    out = dataset.copy()
    n_flip = int(r_in * len(out) + 0.5)
    if n_flip == 0:
        return out
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(out), size=n_flip, replace=False)
    c = out.given_labels[picked]
    if mode == SYMMETRIC:
        shift = rng.integers(1, out.n_classes, size=n_flip)
    else:
        shift = np.ones(n_flip, dtype=np.int64)
    out.given_labels[picked] = (c + shift) % out.n_classes
    out.provenance[picked] = Provenance.ID_NOISE
    return out


def ood_mean(class_means: np.ndarray, class_std: float, params: OodParams) -> np.ndarray:
    """Point at distance offset_sigmas * class_std from the nearest class mean.

    For dim > 2 the point sits off the class-mean plane, so a clean-data
    probe projects it onto the centroid; for dim == 2 it sits between the
    first two class means, as far out as needed.
    """
    offset = params.offset_sigmas * class_std
    centroid = class_means.mean(axis=0)
    radius = float(np.linalg.norm(class_means - centroid, axis=1).max())
    dim = class_means.shape[1]
    if dim > 2 and offset > radius:
        point = centroid.copy()
        point[dim - 1] += np.sqrt(offset ** 2 - radius ** 2)
        return point
    n_classes = class_means.shape[0]
    half = np.pi / n_classes
    if offset < radius * np.sin(half):
        raise ConfigError("ood offset too small for this class layout")
    r = radius * np.cos(half) + np.sqrt(offset ** 2 - (radius * np.sin(half)) ** 2)
    direction = np.zeros(dim)
    direction[0], direction[1] = np.cos(half), np.sin(half)
    return centroid + r * direction


def inject_ood_noise(dataset: Dataset, r_out: float, ood_params: OodParams | str = "far",
                     seed=0) -> Dataset:
    """Replace features of round(r_out * N) still-clean samples.

    Given labels are kept (the original class), true labels become OOD_LABEL.
    """
    if not 0.0 <= r_out <= 1.0:
        raise ConfigError("r_out must lie in [0, 1]")
    if isinstance(ood_params, str):
        try:
            ood_params = OOD_PRESETS[ood_params]
        except KeyError:
            raise ConfigError(f"unknown ood preset {ood_params!r}") from None
    out = dataset.copy()
    n_replace = int(r_out * len(out) + 0.5)
    if n_replace == 0:
        return out
    if out.class_means is None:
        raise ConfigError("dataset lacks class means; generate it with make_blobs")
    eligible = np.flatnonzero(out.provenance == Provenance.CLEAN)
    if n_replace > eligible.size:
        raise ConfigError(f"cannot replace {n_replace} samples, only "
                          f"{eligible.size} clean ones remain")
    rng = np.random.default_rng(seed)
    picked = eligible[rng.choice(eligible.size, size=n_replace, replace=False)]
    center = ood_mean(out.class_means, out.class_std, ood_params)
    std = ood_params.std_factor * out.class_std
    out.features[picked] = center + rng.normal(0.0, std, (n_replace, out.dim))
    out.true_labels[picked] = OOD_LABEL
    out.provenance[picked] = Provenance.OOD_NOISE
    return out


def augment_batch(features: np.ndarray, strength: str, rng: np.random.Generator,
                  class_std: float = 1.0) -> np.ndarray:
    """Vectorized augmentation of a [B, d] batch with a shared generator."""
    sigma_w = WEAK_SIGMA_FACTOR * class_std
    if strength == WEAK:
        return features + rng.normal(0.0, sigma_w, features.shape) if sigma_w > 0 \
            else features.copy()
    if strength != STRONG:
        raise ConfigError(f"unknown augmentation strength {strength!r}")
    lo, hi = STRONG_SCALE_RANGE
    out = features * rng.uniform(lo, hi, features.shape)
    out[rng.random(features.shape) < STRONG_DROPOUT_P] = 0.0
    sigma_s = STRONG_SIGMA_FACTOR * class_std
    if sigma_s > 0:
        out += rng.normal(0.0, sigma_s, features.shape)
    return out


def augment(x: np.ndarray, strength: str, seed, class_std: float = 1.0) -> np.ndarray:
    """Augment a single feature vector deterministically for a seed."""
    rng = np.random.default_rng(seed)
    return augment_batch(np.asarray(x, dtype=np.float64)[None, :], strength, rng,
                         class_std)[0]


def save_dataset(dataset: Dataset, path) -> None:
    """Line-oriented text format: features..., given, true, provenance name."""
    lines = [f"# plslab classes={dataset.n_classes} dim={dataset.dim} "
             f"class_std={dataset.class_std!r}"]
    for i in range(len(dataset)):
        feats = ",".join(repr(float(v)) for v in dataset.features[i])
        lines.append(f"{feats},{dataset.given_labels[i]},{dataset.true_labels[i]},"
                     f"{Provenance(dataset.provenance[i]).name}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    text = Path(path).read_text().strip().splitlines()
    n_classes = None
    class_std = 1.0
    rows = []
    for line in text:
        if line.startswith("#"):
            for tok in line[1:].split():
                if tok.startswith("classes="):
                    n_classes = int(tok.split("=")[1])
                elif tok.startswith("class_std="):
                    class_std = float(tok.split("=")[1])
            continue
        parts = line.split(",")
        rows.append((tuple(float(v) for v in parts[:-3]),
                     int(parts[-3]), int(parts[-2]), Provenance[parts[-1]]))
    if not rows:
        raise ConfigError(f"no samples in {path}")
    feats = np.array([r[0] for r in rows])
    given = np.array([r[1] for r in rows], dtype=np.int64)
    true = np.array([r[2] for r in rows], dtype=np.int64)
    prov = np.array([int(r[3]) for r in rows], dtype=np.int64)
    if n_classes is None:
        n_classes = int(max(given.max(), true.max())) + 1
    return Dataset(feats, given, true, prov, n_classes, class_std)
