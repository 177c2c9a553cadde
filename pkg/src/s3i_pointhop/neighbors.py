"""Exact k-nearest-neighbor queries over a point cloud.

Backed by a kd-tree, with explicit handling of distance ties so that results
always match a brute-force scan ordered by (distance, point index).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def _exact_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    # axis-ordered sum of squares; bitwise-consistent with the kd-tree metric
    diff = points - query
    return np.sqrt((diff**2).sum(axis=-1))


class NeighborIndex:
    """Immutable exact-NN index over N points; concurrent queries are safe."""

    def __init__(self, points: np.ndarray):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must be (N, 3) with N >= 1, got {pts.shape}")
        self.points = pts
        self._tree = cKDTree(pts)
        # cached (width, dist, idx) window shared by all query_all calls;
        # rows are lexsorted by (distance, index) so any prefix is itself the
        # sorted kNN list for a smaller k
        self._window: tuple[int, np.ndarray, np.ndarray] | None = None

    def __len__(self):
        return self.points.shape[0]

    def _sorted_window(self, width: int) -> tuple[np.ndarray, np.ndarray]:
        if self._window is None or self._window[0] < width:
            dist, idx = self._tree.query(self.points, k=width)
            if width == 1:
                dist = dist[:, None]
                idx = idx[:, None]
            order = np.lexsort((idx, dist), axis=-1)
            dist = np.take_along_axis(dist, order, axis=1)
            idx = np.take_along_axis(idx, order, axis=1)
            self._window = (width, dist, idx)
        _, dist, idx = self._window
        return dist[:, :width], idx[:, :width]

    def _tie_safe_candidates(self, query: np.ndarray, dist: np.ndarray, idx: np.ndarray,
                             need: int, kq: int):
        """Widen the fetched window to the full tie group when it may straddle kq."""
        if kq < len(self) and dist[need - 1] == dist[kq - 1]:
            idx = np.asarray(
                self._tree.query_ball_point(query, dist[kq - 1] * (1 + 1e-9) + 1e-300),
                dtype=np.int64)
            dist = _exact_distances(self.points[idx], query)
        return dist, idx

    def query_knn(self, query_point, k: int, include_self: bool = True) -> np.ndarray:
        """Indices of the k nearest points, sorted by (distance, index).

        When include_self is False and the query coincides exactly with a cloud
        point, the smallest-index exact match is treated as "self" and dropped.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query_point, dtype=np.float64).reshape(3)
        n = len(self)
        need = min(k + (0 if include_self else 1), n)
        kq = min(need + 1, n)
        dist, idx = self._tree.query(q, k=kq)
        dist = np.atleast_1d(np.asarray(dist, dtype=np.float64))
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        dist, idx = self._tie_safe_candidates(q, dist, idx, need, kq)
        order = np.lexsort((idx, dist))
        idx = idx[order]
        dist = dist[order]
        if not include_self:
            exact = np.nonzero((self.points[idx] == q).all(axis=1) & (dist == 0.0))[0]
            if exact.size:
                idx = np.delete(idx, exact[0])
        return idx[: min(k, idx.size)]

    def query_all(self, k: int, include_self: bool = True) -> np.ndarray:
        """kNN indices for every cloud point at once; row i queries point i.

        Returns an (N, m) int array with m = min(k, available points), each row
        sorted by (distance, index); row i never contains i when include_self
        is False. Rows whose tie group straddles the fetched window fall back
        to an exact ball query; everything else is fully vectorized.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        n = len(self)
        avail = n if include_self else n - 1
        m = min(k, avail)
        if m == 0:
            return np.empty((n, 0), dtype=np.int64)
        need = m if include_self else m + 1
        kq = min(need + 1, n)
        dist, idx = self._sorted_window(kq)

        if include_self:
            out = idx[:, :m].astype(np.int64, copy=True)
        else:
            # stable-sort kept-first, preserving (distance, index) order
            keep = idx != np.arange(n)[:, None]
            kept_first = np.argsort(~keep, axis=1, kind="stable")
            out = np.take_along_axis(idx, kept_first, axis=1)[:, :m].astype(np.int64, copy=True)

        if kq < n:
            tie_rows = np.nonzero(dist[:, need - 1] == dist[:, kq - 1])[0]
            for i in tie_rows:
                d_i, x_i = self._tie_safe_candidates(self.points[i], dist[i], idx[i], need, kq)
                row_order = np.lexsort((x_i, d_i))
                x_i = x_i[row_order]
                if not include_self:
                    x_i = x_i[x_i != i]
                out[i] = x_i[:m]
        return out


def build(points: np.ndarray) -> NeighborIndex:
    return NeighborIndex(points)


def query_knn(index: NeighborIndex, query_point, k: int, include_self: bool = True) -> np.ndarray:
    return index.query_knn(query_point, k, include_self)
