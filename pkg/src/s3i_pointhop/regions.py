"""Regional feature aggregation over 24 cones and spheres (plus global pooling).

All geometry lives in the canonical pose: cloud centered at the origin and
scaled to the unit ball, so "unit distance along an axis" is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

AXES = ("+x", "-x", "+y", "-y", "+z", "-z")
CONE_COS_HALF_ANGLE = math.sqrt(0.5)  # 45 degree half-angle
SPHERE_RADIUS = 0.25
SPHERE_OFFSETS = (0.25, 0.75)
REGION_STATS = ("max", "mean", "variance", "l1", "l2")
GLOBAL_STATS = ("max", "mean", "l1", "l2")


@dataclass(frozen=True)
class Region:
    """One pooling region: a cone (apex at origin or at the unit point of an
    axis, opening toward the other) or a quarter-radius sphere on an axis."""

    kind: str  # cone_apex_origin | cone_apex_unit | sphere
    axis: str  # one of AXES
    center_offset: float | None = None  # spheres only, distance along axis

    def unit_axis(self) -> np.ndarray:
        u = np.zeros(3)
        u["xyz".index(self.axis[1])] = 1.0 if self.axis[0] == "+" else -1.0
        return u

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for (N, 3) points; boundaries count as inside."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        u = self.unit_axis()
        if self.kind == "cone_apex_origin":
            along = pts @ u
            norms = np.sqrt((pts**2).sum(axis=1))
            return (along >= 0.0) & (along >= norms * CONE_COS_HALF_ANGLE)
        if self.kind == "cone_apex_unit":
            v = pts - u
            along = v @ -u
            norms = np.sqrt((v**2).sum(axis=1))
            return (along >= 0.0) & (along >= norms * CONE_COS_HALF_ANGLE)
        if self.kind == "sphere":
            d = pts - self.center_offset * u
            return np.sqrt((d**2).sum(axis=1)) <= SPHERE_RADIUS
        raise ValueError(f"unknown region kind {self.kind!r}")


def region_membership(region: Region, point) -> bool:
    return bool(region.contains(np.asarray(point, dtype=np.float64).reshape(1, 3))[0])


def build_regions() -> list[Region]:
    """The canonical 24 regions: per axis direction, both cones then both spheres."""
    regions = []
    for axis in AXES:
        regions.append(Region("cone_apex_origin", axis))
        regions.append(Region("cone_apex_unit", axis))
        for offset in SPHERE_OFFSETS:
            regions.append(Region("sphere", axis, offset))
    return regions


@dataclass
class CloudDescriptor:
    """Fixed-length pooled descriptor; region-major, then statistic, then channel."""

    values: np.ndarray
    provenance: dict[str, Any]


def _region_stats(rows: np.ndarray) -> np.ndarray:
    """The 5 pooling statistics per channel: max, mean, population variance,
    l1 norm, l2 norm, concatenated in that order."""
    return np.concatenate([
        rows.max(axis=0),
        rows.mean(axis=0),
        rows.var(axis=0),
        np.abs(rows).sum(axis=0),
        np.sqrt((rows**2).sum(axis=0)),
    ])


def aggregate_regional(point_features: np.ndarray, points: np.ndarray) -> CloudDescriptor:
    """Pool per-point features over the 24 canonical regions.

    Empty regions contribute zeros for all 5 statistics. Output length is
    24 * 5 * D for D feature channels.
    """
    feats = np.asarray(point_features, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    if feats.shape[0] != pts.shape[0]:
        raise ValueError("feature rows and points disagree")
    d = feats.shape[1]
    regions = build_regions()
    blocks = []
    for region in regions:
        members = feats[region.contains(pts)]
        if members.shape[0]:
            blocks.append(_region_stats(members))
        else:
            blocks.append(np.zeros(5 * d))
    return CloudDescriptor(
        values=np.concatenate(blocks),
        provenance={"aggregation": "local", "num_regions": len(regions),
                    "stats": REGION_STATS, "num_channels": d},
    )


def aggregate_global(point_features: np.ndarray) -> np.ndarray:
    """Channel-wise max, mean, l1 and l2 over all points (length 4 * D)."""
    feats = np.asarray(point_features, dtype=np.float64)
    if feats.shape[0] < 1:
        raise ValueError("need at least one point")
    return np.concatenate([
        feats.max(axis=0),
        feats.mean(axis=0),
        np.abs(feats).sum(axis=0),
        np.sqrt((feats**2).sum(axis=0)),
    ])
