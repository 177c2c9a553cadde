"""Independent brute-force oracles used to check the library's fast paths.

Everything here is written from the operation definitions directly (loops,
exhaustive scans, O(N^2) searches) and deliberately shares no code with the
package internals.
"""

import math
from collections import Counter

import numpy as np


def brute_knn(points, query, k, exclude_index=None):
    """O(N) scan: indices of the k nearest points ordered by (distance, index)."""
    diff = points - np.asarray(query, dtype=np.float64)
    dist = np.sqrt((diff**2).sum(axis=1))
    order = sorted(range(len(points)), key=lambda i: (dist[i], i))
    if exclude_index is not None:
        order = [i for i in order if i != exclude_index]
    return np.asarray(order[:k], dtype=np.int64)


def brute_octant_means(offsets):
    """Per-octant means via explicit sign tests; octant code x->bit2 y->bit1 z->bit0."""
    buckets = {code: [] for code in range(8)}
    for off in offsets:
        code = (4 if off[0] >= 0 else 0) + (2 if off[1] >= 0 else 0) + (1 if off[2] >= 0 else 0)
        buckets[code].append(off)
    out = []
    for code in range(8):
        if buckets[code]:
            out.extend(np.mean(buckets[code], axis=0))
        else:
            out.extend([0.0, 0.0, 0.0])
    return np.asarray(out)


def svd_eigen_features(neighbors, up=(0.0, 0.0, 1.0)):
    """The 8 covariance-eigenvalue features recomputed through an SVD route."""
    nb = np.asarray(neighbors, dtype=np.float64)
    centered = nb - nb.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=True)
    lam = np.zeros(3)
    lam[: svals.size] = (svals**2) / nb.shape[0]
    total = lam.sum()
    if total <= 0:
        return np.zeros(8)
    e1, e2, e3 = lam / total
    v3 = vt[2]
    entropy = -sum(e * math.log(e) for e in (e1, e2, e3) if e > 0)
    return np.asarray([
        (e1 - e2) / e1,
        (e2 - e3) / e1,
        (e1 - e3) / e1,
        e3 / e1,
        (e1 * e2 * e3) ** (1.0 / 3.0),
        1.0 - abs(float(np.dot(up, v3))),
        e3,
        entropy,
    ])


def brute_geometric_channels(points, neighbor_idx):
    """Loop recomputation of the 12 distance/cosine channels per neighbor."""
    def cos(a, b):
        na, nb_ = np.linalg.norm(a), np.linalg.norm(b)
        if na < 1e-12 or nb_ < 1e-12:
            return 0.0
        return float(np.dot(a, b) / (na * nb_))

    points = np.asarray(points, dtype=np.float64)
    n, k = neighbor_idx.shape
    out = np.zeros((n, k, 12))
    for i in range(n):
        p = points[i]
        nbrs = points[neighbor_idx[i]]
        m = nbrs.mean(axis=0)
        for j, nb_pt in enumerate(nbrs):
            out[i, j, 0] = np.linalg.norm(p - nb_pt)
            out[i, j, 1] = np.linalg.norm(m - nb_pt)
            out[i, j, 2] = np.linalg.norm(nb_pt)
            out[i, j, 3] = np.linalg.norm(p - m)
            out[i, j, 4] = np.linalg.norm(p)
            out[i, j, 5] = np.linalg.norm(m)
            out[i, j, 6] = cos(nb_pt - p, m - p)
            out[i, j, 7] = cos(nb_pt - p, -p)
            out[i, j, 8] = cos(m - p, -p)
            out[i, j, 9] = cos(p - nb_pt, m - nb_pt)
            out[i, j, 10] = cos(p - nb_pt, -nb_pt)
            out[i, j, 11] = cos(m - nb_pt, -nb_pt)
    return out


def pool_max_mean_l2(channels):
    """(N, k, C) -> (N, 3C) pooled as 12 maxima, 12 means, 12 l2 norms."""
    n, _, c = channels.shape
    out = np.zeros((n, 3 * c))
    for i in range(n):
        for ch in range(c):
            col = channels[i, :, ch]
            out[i, ch] = col.max()
            out[i, c + ch] = col.mean()
            out[i, 2 * c + ch] = math.sqrt(float((col**2).sum()))
    return out


def brute_stats5(rows):
    """max / mean / population variance / l1 / l2, per column, via loops."""
    rows = np.asarray(rows, dtype=np.float64)
    cols = rows.shape[1]
    out = np.zeros(5 * cols)
    for c in range(cols):
        col = rows[:, c]
        mean = col.mean()
        out[c] = col.max()
        out[cols + c] = mean
        out[2 * cols + c] = ((col - mean) ** 2).mean()
        out[3 * cols + c] = np.abs(col).sum()
        out[4 * cols + c] = math.sqrt(float((col**2).sum()))
    return out


def in_cone(point, apex, direction, cos_half_angle):
    v = np.asarray(point, dtype=np.float64) - apex
    along = float(np.dot(v, direction))
    return along >= 0.0 and along >= np.linalg.norm(v) * cos_half_angle


def brute_region_members(points, region):
    """Membership recomputed from the geometric definitions of the regions."""
    u = region.unit_axis()
    members = []
    for i, p in enumerate(points):
        if region.kind == "cone_apex_origin":
            inside = in_cone(p, np.zeros(3), u, math.sqrt(0.5))
        elif region.kind == "cone_apex_unit":
            inside = in_cone(p, u, -u, math.sqrt(0.5))
        else:
            inside = np.linalg.norm(p - region.center_offset * u) <= 0.25
        if inside:
            members.append(i)
    return members


def entropy(labels):
    counts = Counter(labels)
    total = sum(counts.values())
    return -sum((c / total) * math.log(c / total) for c in counts.values())


def split_loss(values, labels, threshold):
    """Exact weighted entropy of the split (values <= threshold | rest)."""
    left = [lab for v, lab in zip(values, labels) if v <= threshold]
    right = [lab for v, lab in zip(values, labels) if v > threshold]
    total = len(values)
    loss = 0.0
    if left:
        loss += len(left) * entropy(left)
    if right:
        loss += len(right) * entropy(right)
    return loss / total


def exhaustive_best_split(values, labels):
    """Minimum loss over midpoints between consecutive distinct sorted values."""
    distinct = sorted(set(float(v) for v in values))
    if len(distinct) == 1:
        return float(distinct[0]), entropy(list(labels))
    best_t, best_loss = None, math.inf
    for a, b in zip(distinct, distinct[1:]):
        t = 0.5 * (a + b)
        loss = split_loss(values, labels, t)
        if loss < best_loss - 1e-15:
            best_t, best_loss = t, loss
    return best_t, best_loss
