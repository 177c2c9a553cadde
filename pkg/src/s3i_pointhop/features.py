"""Per-point rotation-invariant feature construction.

Three complementary blocks per point, concatenated to 68 columns:
  [0..24)  octant block: mean neighbor offset in each of the 8 sign-octants
  [24..32) eigen block: covariance-eigenvalue surface descriptors
  [32..68) geometric block: pooled distances/cosines among
           {origin o, point p, neighborhood mean m, neighbor n}
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neighbors import NeighborIndex

OCTANT_WIDTH = 24
EIGEN_WIDTH = 8
GEOMETRIC_WIDTH = 36
TOTAL_WIDTH = OCTANT_WIDTH + EIGEN_WIDTH + GEOMETRIC_WIDTH

ZERO_VECTOR_NORM = 1e-12  # cosines touching a shorter vector are defined as 0


@dataclass
class FeatureConfig:
    """Neighborhood sizes for the three feature blocks."""

    k_octant: int = 64
    k_covariance: int = 32
    k_geometric: int = 128

    def validate(self, n_points: int) -> None:
        for name, k in (("k_octant", self.k_octant),
                        ("k_covariance", self.k_covariance),
                        ("k_geometric", self.k_geometric)):
            if k < 2:
                raise ValueError(f"{name} must be >= 2, got {k}")
            if k > n_points:
                raise ValueError(f"{name}={k} exceeds the cloud size {n_points}")
        if self.k_covariance < 3:
            raise ValueError("k_covariance must be >= 3")
        if n_points < 2:
            raise ValueError("need at least 2 points for neighborhood features")


def octant_means(offsets: np.ndarray) -> np.ndarray:
    """24-vector of per-octant mean offsets for one neighborhood.

    Octants are coded by coordinate sign (>= 0 counts as positive), x as bit 2,
    y as bit 1, z as bit 0, and ordered by that code; empty octants contribute
    zeros.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    codes = ((offsets[:, 0] >= 0).astype(np.int64) * 4
             + (offsets[:, 1] >= 0).astype(np.int64) * 2
             + (offsets[:, 2] >= 0).astype(np.int64))
    out = np.zeros((8, 3))
    for code in range(8):
        members = offsets[codes == code]
        if members.shape[0]:
            out[code] = members.mean(axis=0)
    return out.reshape(24)


def octant_features(points: np.ndarray, index: NeighborIndex, k_octant: int) -> np.ndarray:
    """(N, 24) octant block; each point uses its k nearest neighbors (self included)."""
    idx = index.query_all(k_octant, include_self=True)
    rel = points[idx] - points[:, None, :]
    codes = ((rel[..., 0] >= 0).astype(np.int64) * 4
             + (rel[..., 1] >= 0).astype(np.int64) * 2
             + (rel[..., 2] >= 0).astype(np.int64))
    n = points.shape[0]
    out = np.zeros((n, 8, 3))
    for code in range(8):
        mask = codes == code
        counts = mask.sum(axis=1)
        sums = np.einsum("nk,nkc->nc", mask.astype(np.float64), rel)
        nonzero = counts > 0
        out[nonzero, code] = sums[nonzero] / counts[nonzero, None]
    return out.reshape(n, 24)


def eigen_features(points: np.ndarray, index: NeighborIndex, k_covariance: int) -> np.ndarray:
    """(N, 8) eigen block from the local covariance of each neighborhood.

    Columns: linearity, planarity, anisotropy, sphericity, omnivariance,
    verticality, surface variation, eigen entropy. All are functions of the
    sum-normalized eigenvalues except verticality, which compares the smallest
    eigenvector against the aligned frame's third axis (the z axis here).
    Neighborhoods with (numerically) zero total variance yield all zeros.
    """
    idx = index.query_all(k_covariance, include_self=True)
    nb = points[idx]
    centered = nb - nb.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / idx.shape[1]
    eigvals, eigvecs = np.linalg.eigh(cov)
    lam = np.clip(eigvals[:, ::-1], 0.0, None)  # descending
    v3 = eigvecs[:, :, 0]  # eigenvector of the smallest eigenvalue

    total = lam.sum(axis=1)
    scale = np.maximum(1.0, np.abs(nb).max(axis=(1, 2)) ** 2)
    live = total > 1e-24 * scale
    safe_total = np.where(live, total, 1.0)
    e = lam / safe_total[:, None]
    e1, e2, e3 = e[:, 0], e[:, 1], e[:, 2]
    safe_e1 = np.where(live, e1, 1.0)

    feats = np.empty((points.shape[0], 8))
    feats[:, 0] = (e1 - e2) / safe_e1
    feats[:, 1] = (e2 - e3) / safe_e1
    feats[:, 2] = (e1 - e3) / safe_e1
    feats[:, 3] = e3 / safe_e1
    feats[:, 4] = np.cbrt(e1 * e2 * e3)
    feats[:, 5] = np.clip(1.0 - np.abs(v3[:, 2]), 0.0, 1.0)
    feats[:, 6] = e3
    with np.errstate(divide="ignore", invalid="ignore"):
        log_e = np.where(e > 0.0, np.log(np.where(e > 0.0, e, 1.0)), 0.0)
    feats[:, 7] = np.maximum(-(e * log_e).sum(axis=1), 0.0)
    feats[~live] = 0.0
    return feats


def _safe_divide(dot: np.ndarray, norm_a, norm_b) -> np.ndarray:
    """dot / (|a| |b|) with the convention that near-zero vectors give cosine 0."""
    ok = (norm_a >= ZERO_VECTOR_NORM) & (norm_b >= ZERO_VECTOR_NORM)
    return np.where(ok, dot / np.where(ok, norm_a * norm_b, 1.0), 0.0)


def _geometric_channels(points: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """(N, k, 12) distance/cosine channels; idx rows exclude the query point.

    Anchors: global origin o (the cloud is centered), the point p, the
    neighborhood mean m (over the k neighbors, excluding p), each neighbor n.
    Channels: ||p-n||, ||m-n||, ||n||, ||p-m||, ||p||, ||m||, then cosines of
    (n-p, m-p), (n-p, -p), (m-p, -p), (p-n, m-n), (p-n, -n), (m-n, -n).
    Norms and dot products are shared across channels; this is the hot path.
    """
    nb = points[idx]                         # (N, k, 3)
    m = nb.mean(axis=1)                      # (N, 3)
    n_minus_p = nb - points[:, None, :]      # n - p
    m_minus_n = m[:, None, :] - nb           # m - n
    m_minus_p = m - points                   # (N, 3)

    def norms(v):
        return np.sqrt(np.einsum("...c,...c->...", v, v))

    d_pn = norms(n_minus_p)                  # ||p - n||, (N, k)
    d_mn = norms(m_minus_n)                  # ||m - n||
    d_n = norms(nb)                          # ||n||
    d_pm = norms(m_minus_p)                  # ||p - m||, (N,)
    d_p = norms(points)                      # ||p||
    d_m = norms(m)                           # ||m||

    n, k = idx.shape
    channels = np.empty((n, k, 12))
    channels[..., 0] = d_pn
    channels[..., 1] = d_mn
    channels[..., 2] = d_n
    channels[..., 3] = d_pm[:, None]
    channels[..., 4] = d_p[:, None]
    channels[..., 5] = d_m[:, None]
    # cosines, written as signed dot products of the vectors above:
    #   <n-p, m-p>, <n-p, o-p> = -<n-p, p>, <m-p, o-p> = -<m-p, p>,
    #   <p-n, m-n> = -<n-p, m-n>, <p-n, o-n> = <n-p, n>, <m-n, o-n> = -<m-n, n>
    channels[..., 6] = _safe_divide(
        np.einsum("nkc,nc->nk", n_minus_p, m_minus_p), d_pn, d_pm[:, None])
    channels[..., 7] = _safe_divide(
        -np.einsum("nkc,nc->nk", n_minus_p, points), d_pn, d_p[:, None])
    channels[..., 8] = _safe_divide(
        -np.einsum("nc,nc->n", m_minus_p, points), d_pm, d_p)[:, None]
    channels[..., 9] = _safe_divide(
        -np.einsum("nkc,nkc->nk", n_minus_p, m_minus_n), d_pn, d_mn)
    channels[..., 10] = _safe_divide(
        np.einsum("nkc,nkc->nk", n_minus_p, nb), d_pn, d_n)
    channels[..., 11] = _safe_divide(
        -np.einsum("nkc,nkc->nk", m_minus_n, nb), d_mn, d_n)
    return channels


def geometric_features(points: np.ndarray, index: NeighborIndex, k_geometric: int) -> np.ndarray:
    """(N, 36) geometric block: 12 channels pooled over the k neighbors.

    Pooling is channel-wise max, mean, and l2 norm, laid out as 12 maxima,
    then 12 means, then 12 norms. The query point is excluded from its own
    neighborhood (a zero offset would poison the angles).
    """
    idx = index.query_all(k_geometric, include_self=False)
    channels = _geometric_channels(points, idx)
    return np.concatenate(
        [channels.max(axis=1),
         channels.mean(axis=1),
         np.sqrt((channels**2).sum(axis=1))],
        axis=1)


def assemble_features(octant: np.ndarray, eigen: np.ndarray, geometric: np.ndarray) -> np.ndarray:
    """Column-concatenate the three blocks into the (N, 68) feature matrix."""
    octant = np.asarray(octant, dtype=np.float64)
    eigen = np.asarray(eigen, dtype=np.float64)
    geometric = np.asarray(geometric, dtype=np.float64)
    widths = (octant.shape[1], eigen.shape[1], geometric.shape[1])
    if widths != (OCTANT_WIDTH, EIGEN_WIDTH, GEOMETRIC_WIDTH):
        raise ValueError(f"block widths {widths} != {(OCTANT_WIDTH, EIGEN_WIDTH, GEOMETRIC_WIDTH)}")
    if not octant.shape[0] == eigen.shape[0] == geometric.shape[0]:
        raise ValueError("blocks disagree on the number of points")
    return np.hstack([octant, eigen, geometric])


def compute_point_features(points: np.ndarray, config: FeatureConfig,
                           use_octant: bool = True, use_covariance: bool = True,
                           use_geometric: bool = True,
                           index: NeighborIndex | None = None) -> np.ndarray:
    """Full (N, 68) matrix for an aligned, normalized cloud.

    Disabled blocks contribute zero columns of their usual width so the column
    layout never changes. One neighbor index serves all blocks (one kNN pass
    per enabled feature set).
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    config.validate(n)
    if index is None:
        index = NeighborIndex(points)
    # widest neighborhood first so the index's candidate window is fetched once
    geometric = (geometric_features(points, index, config.k_geometric)
                 if use_geometric else np.zeros((n, GEOMETRIC_WIDTH)))
    octant = (octant_features(points, index, config.k_octant)
              if use_octant else np.zeros((n, OCTANT_WIDTH)))
    eigen = (eigen_features(points, index, config.k_covariance)
             if use_covariance else np.zeros((n, EIGEN_WIDTH)))
    return assemble_features(octant, eigen, geometric)
