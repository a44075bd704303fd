"""Two-component 1-D Gaussian mixture fitted by EM.

Inputs are min-max normalized to [0, 1] before fitting so tolerance and
initialization are scale-free. Component 0 is always the low-mean mode; its
posterior is the "clean" / "correct" probability used by both detection
stages of the training loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VARIANCE_FLOOR = 1e-6
DEGENERATE_RANGE = 1e-12


@dataclass
class GmmFit:
    """Mixture parameters in normalized space plus convergence diagnostics."""

    means: tuple[float, float]            # ascending
    variances: tuple[float, float]
    weights: tuple[float, float]
    iterations: int
    converged: bool
    input_min: float
    input_max: float
    degenerate: bool = False
    log_likelihoods: list[float] = field(default_factory=list)

    def means_raw(self) -> tuple[float, float]:
        """Component means mapped back to the original input scale."""
        span = self.input_max - self.input_min
        return (self.input_min + self.means[0] * span,
                self.input_min + self.means[1] * span)


def _log_pdf(x: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    return -0.5 * (np.log(2.0 * np.pi * variances) + (x[:, None] - means) ** 2 / variances)


def _posteriors(x, means, variances, weights):
    with np.errstate(divide="ignore"):
        logp = np.log(weights) + _log_pdf(x, means, variances)
    m = logp.max(axis=1, keepdims=True)
    p = np.exp(logp - m)
    s = p.sum(axis=1, keepdims=True)
    mean_ll = float(np.mean(m[:, 0] + np.log(s[:, 0])))
    return p / s, mean_ll


def fit_gmm_1d(values, max_iter: int = 100, tol: float = 1e-6) -> GmmFit:
    """Fit a 2-component mixture; returns a degenerate fit if all values tie."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("fit_gmm_1d expects a 1-D sequence")
    if v.size < 10:
        raise ValueError(f"fit_gmm_1d needs at least 10 values, got {v.size}")
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < DEGENERATE_RANGE:
        return GmmFit(means=(0.0, 0.0), variances=(VARIANCE_FLOOR, VARIANCE_FLOOR),
                      weights=(0.5, 0.5), iterations=0, converged=True,
                      input_min=lo, input_max=hi, degenerate=True)
    x = (v - lo) / (hi - lo)

    means = np.percentile(x, [10.0, 90.0])
    variances = np.full(2, max(float(x.var()) / 4.0, VARIANCE_FLOOR))
    weights = np.array([0.5, 0.5])

    lls: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        resp, ll = _posteriors(x, means, variances, weights)
        lls.append(ll)
        if len(lls) > 1 and abs(lls[-1] - lls[-2]) < tol:
            converged = True
            break
        nk = np.maximum(resp.sum(axis=0), 1e-12)
        weights = nk / x.size
        means = (resp * x[:, None]).sum(axis=0) / nk
        variances = np.maximum((resp * (x[:, None] - means) ** 2).sum(axis=0) / nk,
                               VARIANCE_FLOOR)

    order = np.argsort(means)
    means, variances, weights = means[order], variances[order], weights[order]
    return GmmFit(means=(float(means[0]), float(means[1])),
                  variances=(float(variances[0]), float(variances[1])),
                  weights=(float(weights[0]), float(weights[1])),
                  iterations=iterations, converged=converged,
                  input_min=lo, input_max=hi, log_likelihoods=lls)


def posterior_low_batch(fit: GmmFit, values) -> np.ndarray:
    """Posterior probability of the low-mean component for each raw value."""
    v = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if fit.degenerate:
        return np.ones(v.shape)
    x = (v - fit.input_min) / (fit.input_max - fit.input_min)
    post, _ = _posteriors(x, np.asarray(fit.means), np.asarray(fit.variances),
                          np.asarray(fit.weights))
    return post[:, 0]


def posterior_low(fit: GmmFit, value: float) -> float:
    if fit.degenerate:
        return 1.0
    return float(posterior_low_batch(fit, [value])[0])
