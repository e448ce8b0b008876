"""Genuine-class balancing: raw-signal augmentation (jitter, time warping)
and feature-space oversampling (SMOTE, ADASYN).

All four methods are deterministic functions of (input, parameters, seed);
batch helpers derive one generator per synthetic sample from (seed, index)
so results do not depend on generation order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ParameterError

DEFAULT_NEIGHBORS = 5
DEFAULT_SIGMA = 0.05


@dataclass(frozen=True)
class AugmentSpec:
    method: str                      # jitter | timew | smote | adasyn
    sigma: float = DEFAULT_SIGMA     # jitter / timew noise scale
    k: int = DEFAULT_NEIGHBORS       # smote / adasyn neighbor count
    target_count: int | None = None  # per-class count after augmentation
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("jitter", "timew", "smote", "adasyn"):
            raise ParameterError(f"unknown augmentation method {self.method!r}")
        if self.sigma <= 0:
            raise ParameterError("sigma must be positive")
        if self.k < 1:
            raise ParameterError("k must be at least 1")

    @property
    def is_raw_signal(self) -> bool:
        return self.method in ("jitter", "timew")


def jitter(trial: np.ndarray, sigma: float, seed) -> np.ndarray:
    """Add Gaussian noise scaled by each channel's own standard deviation.

    Using a relative scale keeps the paper's sigma=0.05 meaningful for
    signals of arbitrary amplitude.
    """
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    trial = np.asarray(trial, dtype=float)
    rng = np.random.default_rng(seed)
    s_c = trial.std(axis=1, keepdims=True)
    return trial + rng.standard_normal(trial.shape) * (sigma * s_c)


def time_warp(trial: np.ndarray, sigma: float, seed) -> np.ndarray:
    """Stretch or compress one of 2-4 equal time slices, then resample back.

    The same piecewise-linear time map is applied to all channels; the warp
    factor z ~ N(1, sigma) is truncated to [1-3*sigma, 1+3*sigma].
    """
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    trial = np.asarray(trial, dtype=float)
    n = trial.shape[1]
    rng = np.random.default_rng(seed)
    n_slices = int(rng.integers(2, 5))
    chosen = int(rng.integers(0, n_slices))
    z = float(np.clip(rng.normal(1.0, sigma), 1.0 - 3.0 * sigma, 1.0 + 3.0 * sigma))
    z = max(z, 0.05)

    a = n * chosen // n_slices
    b = n * (chosen + 1) // n_slices
    rate = np.ones(n - 1)
    rate[a : max(a, min(b, n - 1))] = z
    warped = np.concatenate([[0.0], np.cumsum(rate)])
    new_axis = np.linspace(0.0, warped[-1], n)
    positions = np.interp(new_axis, warped, np.arange(n, dtype=float))
    out = np.empty_like(trial)
    for c in range(trial.shape[0]):
        out[c] = np.interp(positions, np.arange(n, dtype=float), trial[c])
    return out


def _interpolate(x: np.ndarray, neighbor: np.ndarray, u: float) -> np.ndarray:
    return x + u * (neighbor - x)


def _minority_neighbor_table(X_min: np.ndarray, k: int) -> np.ndarray:
    """Indices of each minority point's k nearest minority neighbors (Euclidean)."""
    m = X_min.shape[0]
    k = min(k, m - 1)
    d2 = np.sum((X_min[:, None, :] - X_min[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote(
    features: np.ndarray,
    labels: np.ndarray,
    minority_label,
    target_count: int,
    k: int = DEFAULT_NEIGHBORS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Append line-interpolated minority synthetics until the minority class
    reaches target_count. Non-minority rows pass through untouched."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    min_idx = np.where(y == minority_label)[0]
    m = min_idx.size
    if m < 2:
        raise InsufficientDataError(f"minority class has {m} samples; need at least 2")
    n_new = target_count - m
    if n_new < 0:
        raise ParameterError("target_count is below the current minority count")
    if n_new == 0:
        return X.copy(), y.copy()
    X_min = X[min_idx]
    neighbors = _minority_neighbor_table(X_min, k)
    synth = np.empty((n_new, X.shape[1]))
    for j in range(n_new):
        rng = np.random.default_rng([int(seed), 71, j])
        i = int(rng.integers(m))
        nn = int(neighbors[i, rng.integers(neighbors.shape[1])])
        synth[j] = _interpolate(X_min[i], X_min[nn], float(rng.random()))
    out_y = np.concatenate([y, np.full(n_new, minority_label, dtype=y.dtype)])
    return np.vstack([X, synth]), out_y


def largest_remainder_allocation(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation of `total` proportional to `weights`, sum preserved."""
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        raise ParameterError("weights must sum to a positive value")
    quota = weights / weights.sum() * total
    base = np.floor(quota).astype(int)
    short = total - base.sum()
    remainders = quota - base
    order = np.lexsort((np.arange(weights.size), -remainders))
    base[order[:short]] += 1
    return base


def adasyn(
    features: np.ndarray,
    labels: np.ndarray,
    minority_label,
    target_count: int,
    k: int = DEFAULT_NEIGHBORS,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """SMOTE-style synthesis, with per-point budgets proportional to how
    majority-crowded each minority point's neighborhood is."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    min_idx = np.where(y == minority_label)[0]
    m = min_idx.size
    if m < 2:
        raise InsufficientDataError(f"minority class has {m} samples; need at least 2")
    n_new = target_count - m
    if n_new < 0:
        raise ParameterError("target_count is below the current minority count")
    if n_new == 0:
        return X.copy(), y.copy()

    # hardness r_i: majority fraction among each minority point's k nearest
    # neighbors over the full dataset
    d2_all = np.sum((X[min_idx][:, None, :] - X[None, :, :]) ** 2, axis=2)
    for row, gi in enumerate(min_idx):
        d2_all[row, gi] = np.inf
    k_all = min(k, X.shape[0] - 1)
    nn_all = np.argsort(d2_all, axis=1, kind="stable")[:, :k_all]
    r = np.array([(y[nn_all[i]] != minority_label).mean() for i in range(m)])
    if r.sum() == 0:
        warnings.warn(
            "no minority point has majority neighbors; falling back to uniform allocation",
            stacklevel=2,
        )
        r = np.ones(m)
    budgets = largest_remainder_allocation(r, n_new)

    X_min = X[min_idx]
    neighbors = _minority_neighbor_table(X_min, k)
    synth = np.empty((n_new, X.shape[1]))
    j = 0
    for i in range(m):
        for _ in range(budgets[i]):
            rng = np.random.default_rng([int(seed), 72, j])
            nn = int(neighbors[i, rng.integers(neighbors.shape[1])])
            synth[j] = _interpolate(X_min[i], X_min[nn], float(rng.random()))
            j += 1
    out_y = np.concatenate([y, np.full(n_new, minority_label, dtype=y.dtype)])
    return np.vstack([X, synth]), out_y


def augment_features(
    spec: AugmentSpec,
    features: np.ndarray,
    labels: np.ndarray,
    minority_label,
    default_target: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch a feature-space AugmentSpec (smote | adasyn)."""
    if spec.is_raw_signal:
        raise ParameterError(f"{spec.method} operates on raw trials, not feature rows")
    target = spec.target_count if spec.target_count is not None else default_target
    fn = smote if spec.method == "smote" else adasyn
    return fn(features, labels, minority_label, target, k=spec.k, seed=spec.seed)


def augment_trials(
    spec: AugmentSpec,
    trials: list[np.ndarray],
    n_new: int,
) -> list[np.ndarray]:
    """Generate n_new raw-signal synthetics by cycling over source trials."""
    if not spec.is_raw_signal:
        raise ParameterError(f"{spec.method} operates on feature rows, not raw trials")
    if not trials:
        raise InsufficientDataError("no source trials to augment")
    fn = jitter if spec.method == "jitter" else time_warp
    out = []
    for j in range(n_new):
        src = trials[j % len(trials)]
        out.append(fn(src, spec.sigma, [int(spec.seed), 73, j]))
    return out
