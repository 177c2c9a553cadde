"""Point cloud primitives: cloud/rotation types, normalization, sampling, random rotations."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloudError, ZeroAreaMeshError

ROTATION_PROTOCOLS = ("none", "z", "so3")


@dataclass
class PointCloud:
    """An ordered set of N 3D points with an optional class label."""

    points: np.ndarray
    label: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError(f"points must be an (N, 3) array with N >= 1, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points contain non-finite coordinates")
        self.points = pts

    def __len__(self):
        return self.points.shape[0]


@dataclass
class Rotation:
    """A proper rotation (member of SO(3)) stored as a 3x3 matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"rotation matrix must be 3x3, got {m.shape}")
        if np.abs(m.T @ m - np.eye(3)).max() > 1e-12:
            raise ValueError("matrix is not orthogonal within 1e-12")
        if abs(np.linalg.det(m) - 1.0) > 1e-12:
            raise ValueError("matrix determinant is not +1 within 1e-12")
        self.matrix = m

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3))


def derive_seed(master_seed: int, *tokens) -> int:
    """Stable 64-bit seed derived from a master seed and arbitrary string tokens.

    Uses SHA-256 so the result is reproducible across processes and platforms
    (unlike the builtin salted `hash`). Used to give every dataset entry its
    own sampling/rotation stream independent of manifest ordering.
    """
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode())
    for tok in tokens:
        h.update(b"\x00")
        h.update(str(tok).encode())
    return int.from_bytes(h.digest()[:8], "little")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def normalize(cloud: PointCloud) -> PointCloud:
    """Center the cloud on its centroid and scale the farthest point to norm 1."""
    pts = cloud.points
    scale_before = max(float(np.abs(pts).max()), 1e-300)
    centered = pts - pts.mean(axis=0)
    max_norm = float(np.sqrt((centered**2).sum(axis=1)).max())
    if max_norm <= 1e-12 * scale_before:
        raise DegenerateCloudError("all points coincide; cannot normalize")
    return PointCloud(centered / max_norm, label=cloud.label)


def _rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def random_rotation(protocol: str, seed) -> Rotation:
    """Draw a random rotation according to a protocol.

    protocol:
        "none" -> identity.
        "z"    -> rotation about the z axis, angle uniform in [0, 2*pi).
        "so3"  -> extrinsic rotations about the fixed X, then Y, then Z axes,
                  each angle uniform in [0, 2*pi).
    seed: int seed or a numpy Generator (consumed in X, Y, Z draw order).
    """
    if protocol not in ROTATION_PROTOCOLS:
        raise ValueError(f"unknown rotation protocol {protocol!r}")
    if protocol == "none":
        return Rotation.identity()
    rng = _as_rng(seed)
    if protocol == "z":
        return Rotation(_rot_z(rng.uniform(0.0, 2.0 * np.pi)))
    ax = rng.uniform(0.0, 2.0 * np.pi)
    ay = rng.uniform(0.0, 2.0 * np.pi)
    az = rng.uniform(0.0, 2.0 * np.pi)
    return Rotation(_rot_z(az) @ _rot_y(ay) @ _rot_x(ax))


def apply_rotation(cloud: PointCloud, rotation: Rotation) -> PointCloud:
    """Rotate every point p -> R @ p; the label is preserved."""
    return PointCloud(cloud.points @ rotation.matrix.T, label=cloud.label)


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def sample_surface(vertices: np.ndarray, faces: np.ndarray, n_points: int, seed) -> PointCloud:
    """Sample n_points uniformly over a triangle mesh surface.

    Triangles are selected with probability proportional to area, then a point
    is drawn uniformly inside each via barycentric coordinates. Deterministic
    given the seed.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3 or faces.shape[0] < 1:
        raise ValueError("faces must be an (F, 3) index array with F >= 1")
    areas = triangle_areas(vertices, faces)
    total = areas.sum()
    if not total > 0.0:
        raise ZeroAreaMeshError("mesh has zero total surface area")
    rng = _as_rng(seed)
    chosen = rng.choice(faces.shape[0], size=n_points, p=areas / total)
    u = rng.random(n_points)
    v = rng.random(n_points)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    a = vertices[faces[chosen, 0]]
    b = vertices[faces[chosen, 1]]
    c = vertices[faces[chosen, 2]]
    pts = a + u[:, None] * (b - a) + v[:, None] * (c - a)
    return PointCloud(pts)
