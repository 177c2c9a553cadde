"""Regularized linear least squares on one-hot class targets, argmax prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RELATIVE_RIDGE = 1e-4  # default ridge, relative to trace(X^T X) / num_features


@dataclass
class LinearModel:
    """Weights of shape (k + 1, C); the last row is the unpenalized bias."""

    weights: np.ndarray
    class_count: int


def default_ridge(features: np.ndarray) -> float:
    k = features.shape[1]
    if k == 0:
        return 0.0
    return RELATIVE_RIDGE * float((features**2).sum()) / k


def fit_classifier(features: np.ndarray, labels: np.ndarray,
                   ridge: float | None = None, class_count: int | None = None) -> LinearModel:
    """Solve min ||[X|1] W - Y||^2 + ridge * ||W_features||^2 for one-hot Y.

    The bias row is never penalized. ridge=None picks a small data-relative
    default; ridge=0 falls back to the minimum-norm least squares solution so
    rank-deficient designs still solve.
    """
    x = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if x.ndim != 2 or x.shape[0] != labels.size or x.shape[0] < 1:
        raise ValueError(f"bad design shape {x.shape} for {labels.size} labels")
    if class_count is None:
        class_count = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= class_count:
        raise ValueError("labels out of range")
    if ridge is None:
        ridge = default_ridge(x)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")

    m, k = x.shape
    targets = np.zeros((m, class_count))
    targets[np.arange(m), labels] = 1.0
    design = np.hstack([x, np.ones((m, 1))])

    if ridge == 0.0:
        weights = np.linalg.lstsq(design, targets, rcond=None)[0]
    else:
        gram = design.T @ design
        gram[np.arange(k), np.arange(k)] += ridge  # bias entry untouched
        weights = np.linalg.solve(gram, design.T @ targets)
    return LinearModel(weights=weights, class_count=class_count)


def decision_scores(model: LinearModel, features: np.ndarray) -> np.ndarray:
    feats = np.asarray(features, dtype=np.float64)
    single = feats.ndim == 1
    feats = np.atleast_2d(feats)
    if feats.shape[1] != model.weights.shape[0] - 1:
        raise ValueError(f"expected {model.weights.shape[0] - 1} features, got {feats.shape[1]}")
    scores = feats @ model.weights[:-1] + model.weights[-1]
    return scores[0] if single else scores


def predict(model: LinearModel, features: np.ndarray):
    """Argmax class per row (ties go to the smallest class index).

    Returns (label, scores) for a 1-D input and (labels, scores) for a batch.
    """
    scores = decision_scores(model, features)
    if scores.ndim == 1:
        return int(np.argmax(scores)), scores
    return np.argmax(scores, axis=1), scores
