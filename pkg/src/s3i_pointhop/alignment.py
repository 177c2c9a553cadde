"""Coarse canonical alignment of a cloud with its principal axes.

PCA gives each principal direction only up to sign; signs are resolved
deterministically from the third central moment of the projections so that a
rotated copy of a generic cloud lands in the same canonical pose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud, normalize

DEGENERATE_GAP_RATIO = 1e-6
SKEW_FALLBACK_SCALE = 1e-9


@dataclass
class AlignmentFrame:
    """Principal directions (rows, descending eigenvalue) and their eigenvalues."""

    axes: np.ndarray
    eigenvalues: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        self.axes = np.asarray(self.axes, dtype=np.float64)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)


def _resolve_sign(projections: np.ndarray, variance: float) -> float:
    """Sign that makes the projection skew (sum of cubes) non-negative.

    Near-symmetric distributions fall back to the sign of the projection with
    the largest magnitude, which is still deterministic.
    """
    skew = float((projections**3).sum())
    threshold = SKEW_FALLBACK_SCALE * projections.size * max(variance, 0.0) ** 1.5
    if abs(skew) >= threshold and skew != 0.0:
        return 1.0 if skew > 0.0 else -1.0
    extreme = projections[np.argmax(np.abs(projections))]
    return -1.0 if extreme < 0.0 else 1.0


def fit_frame(cloud: PointCloud | np.ndarray) -> AlignmentFrame:
    """Fit the principal-axis frame of a (centered) cloud.

    The first two axes get deterministic signs; the third is their cross
    product so the frame is always right-handed. A degenerate flag is set when
    adjacent eigenvalues are closer than DEGENERATE_GAP_RATIO relative to the
    largest; alignment still proceeds but is unstable for such clouds.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    n = pts.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points to fit a frame")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals[::-1], 0.0, None)
    axes = eigvecs[:, ::-1].T.copy()

    if eigvals[0] <= 0.0:
        return AlignmentFrame(np.eye(3), eigvals, degenerate=True)

    degenerate = bool(((eigvals[:-1] - eigvals[1:]) / eigvals[0] < DEGENERATE_GAP_RATIO).any())
    for i in range(2):
        axes[i] *= _resolve_sign(centered @ axes[i], float(eigvals[i]))
    axes[2] = np.cross(axes[0], axes[1])
    return AlignmentFrame(axes, eigvals, degenerate=degenerate)


def align(cloud: PointCloud, frame: AlignmentFrame) -> PointCloud:
    """Express every point in the frame's coordinates (p -> axes @ p)."""
    return PointCloud(cloud.points @ frame.axes.T, label=cloud.label)


def canonicalize(cloud: PointCloud) -> tuple[PointCloud, AlignmentFrame]:
    """Normalize, align with the principal axes, and rescale to the unit ball.

    This is the canonical pose used by every downstream feature: centroid at
    the origin, max point norm exactly 1, covariance diagonal with descending
    entries.
    """
    normed = normalize(cloud)
    frame = fit_frame(normed)
    aligned = align(normed, frame)
    max_norm = float(np.sqrt((aligned.points**2).sum(axis=1)).max())
    if max_norm > 0.0:
        aligned = PointCloud(aligned.points / max_norm, label=aligned.label)
    return aligned, frame
