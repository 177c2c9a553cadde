"""Discriminant feature test: rank feature columns by best-binary-split
weighted entropy and keep the most discriminant ones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_NUM_SELECTED = 2700
DEFAULT_NUM_THRESHOLDS = 31


@dataclass
class DftRecord:
    """Score of one feature column: value range, best threshold, and its loss."""

    feature_index: int
    f_min: float
    f_max: float
    f_op: float
    loss: float


@dataclass
class SelectionConfig:
    num_selected: int = DEFAULT_NUM_SELECTED
    num_candidate_thresholds: int = DEFAULT_NUM_THRESHOLDS


def _entropy_sum(counts: np.ndarray) -> np.ndarray:
    """n*H(distribution) from per-class counts, vectorized over the last axis.

    Uses n*H = n*ln(n) - sum_c c*ln(c) so empty splits contribute exactly 0.
    """
    n = counts.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        c_ln_c = np.where(counts > 0, counts * np.log(np.where(counts > 0, counts, 1.0)), 0.0)
        n_ln_n = np.where(n > 0, n * np.log(np.where(n > 0, n, 1.0)), 0.0)
    return n_ln_n - c_ln_c.sum(axis=0)


def _total_entropy(labels: np.ndarray, class_count: int) -> float:
    counts = np.bincount(labels, minlength=class_count).astype(np.float64)
    return float(_entropy_sum(counts[:, None])[0] / labels.size)


def _score_column(values: np.ndarray, labels: np.ndarray, class_count: int,
                  num_candidates: int) -> tuple[float, float, float, float]:
    """(f_min, f_max, f_op, loss) for one column; labels are validated upstream."""
    f_min = float(values.min())
    f_max = float(values.max())
    if f_min == f_max:
        return f_min, f_max, f_min, _total_entropy(labels, class_count)

    # uniformly spaced interior candidate thresholds
    steps = np.arange(1, num_candidates + 1, dtype=np.float64) / (num_candidates + 1)
    thresholds = f_min + (f_max - f_min) * steps
    # position j means the value is <= thresholds[j..]; bucket num_candidates
    # means the value exceeds every threshold
    position = np.searchsorted(thresholds, values, side="left")
    hist = np.zeros((class_count, num_candidates + 1))
    np.add.at(hist, (labels, position), 1.0)
    left = hist.cumsum(axis=1)[:, :num_candidates]
    right = hist.sum(axis=1, keepdims=True) - left
    losses = (_entropy_sum(left) + _entropy_sum(right)) / values.size
    best = int(np.argmin(losses))  # first minimum = smallest threshold
    return f_min, f_max, float(thresholds[best]), float(losses[best])


def dft_score(column_values: np.ndarray, labels: np.ndarray,
              num_candidates: int = DEFAULT_NUM_THRESHOLDS,
              class_count: int | None = None, feature_index: int = 0) -> DftRecord:
    """Score one feature column by its best weighted-entropy binary split.

    Candidates are `num_candidates` uniformly spaced interior points of the
    column's value range; samples with value <= threshold go left. Lower loss
    means stronger discriminant power.
    """
    values = np.asarray(column_values, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if values.size != labels.size:
        raise ValueError("values and labels disagree in length")
    if values.size < 2:
        raise ValueError("need at least 2 samples")
    if np.unique(labels).size < 2:
        raise ValueError("need at least 2 distinct labels")
    if class_count is None:
        class_count = int(labels.max()) + 1
    f_min, f_max, f_op, loss = _score_column(values, labels, class_count, num_candidates)
    return DftRecord(feature_index=feature_index, f_min=f_min, f_max=f_max,
                     f_op=f_op, loss=loss)


def score_all_features(descriptors: np.ndarray, labels: np.ndarray,
                       num_candidates: int = DEFAULT_NUM_THRESHOLDS,
                       class_count: int | None = None) -> np.ndarray:
    """Per-column losses for an (M, F) descriptor matrix (parallelizable)."""
    descriptors = np.asarray(descriptors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if descriptors.shape[0] != labels.size:
        raise ValueError("descriptor rows and labels disagree")
    if descriptors.shape[0] < 2 or np.unique(labels).size < 2:
        raise ValueError("need at least 2 samples spanning 2 distinct labels")
    if class_count is None:
        class_count = int(labels.max()) + 1
    losses = np.empty(descriptors.shape[1])
    for j in range(descriptors.shape[1]):
        losses[j] = _score_column(descriptors[:, j], labels, class_count, num_candidates)[3]
    return losses


def select_features(descriptors: np.ndarray, labels: np.ndarray,
                    config: SelectionConfig | None = None) -> np.ndarray:
    """Indices of the top columns, ascending by loss with ties by column index."""
    config = config or SelectionConfig()
    descriptors = np.asarray(descriptors, dtype=np.float64)
    if descriptors.shape[1] < config.num_selected:
        raise ValueError(f"cannot select {config.num_selected} of "
                         f"{descriptors.shape[1]} feature columns")
    losses = score_all_features(descriptors, labels,
                                num_candidates=config.num_candidate_thresholds)
    order = np.lexsort((np.arange(losses.size), losses))
    return order[: config.num_selected].astype(np.int64)
