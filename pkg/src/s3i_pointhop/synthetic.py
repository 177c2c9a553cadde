"""Synthetic shape datasets for tests, demos, and desk-scale benchmarks.

Shapes are emitted in a canonical pose; the pipeline's rotation protocols are
responsible for randomizing orientation. Coordinates get additive Gaussian
noise so no point sits exactly on an octant or region boundary.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import PointCloud, derive_seed
from .io import DatasetManifest, save_xyz

DEFAULT_NOISE = 0.02


def _unit_sphere(n, rng):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _axis_jitter(rng, spread=0.08):
    return 1.0 + rng.uniform(-spread, spread, size=3)


def _sphere(n, rng):
    radii = np.array([0.5, 0.46, 0.42]) * _axis_jitter(rng)
    return _unit_sphere(n, rng) * radii


def _box(n, rng):
    half = np.array([0.55, 0.4, 0.28]) * _axis_jitter(rng)
    face_axis = np.repeat(np.arange(3), 2)
    face_sign = np.tile([1.0, -1.0], 3)
    areas = np.array([half[1] * half[2], half[1] * half[2],
                      half[0] * half[2], half[0] * half[2],
                      half[0] * half[1], half[0] * half[1]])
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * half
    pts[np.arange(n), face_axis[faces]] = half[face_axis[faces]] * face_sign[faces]
    return pts


def _cylinder(n, rng):
    radius = 0.32 * (1.0 + rng.uniform(-0.08, 0.08))
    half_h = 0.55 * (1.0 + rng.uniform(-0.08, 0.08))
    side_area = 2.0 * np.pi * radius * 2.0 * half_h
    cap_area = np.pi * radius**2
    p_side = side_area / (side_area + 2.0 * cap_area)
    on_side = rng.random(n) < p_side
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.empty((n, 3))
    pts[:, 0] = np.where(on_side,
                         rng.uniform(-half_h, half_h, size=n),
                         np.where(rng.random(n) < 0.5, half_h, -half_h))
    r = np.where(on_side, radius, radius * np.sqrt(rng.random(n)))
    pts[:, 1] = r * np.cos(theta)
    pts[:, 2] = r * np.sin(theta)
    return pts


def _plane(n, rng):
    half = np.array([0.55, 0.35]) * (1.0 + rng.uniform(-0.08, 0.08, size=2))
    pts = np.zeros((n, 3))
    pts[:, :2] = rng.uniform(-1.0, 1.0, size=(n, 2)) * half
    return pts


def _cube_shell(n, rng, half_side):
    face_axis = np.repeat(np.arange(3), 2)
    face_sign = np.tile([1.0, -1.0], 3)
    faces = rng.integers(0, 6, size=n)
    pts = rng.uniform(-half_side, half_side, size=(n, 3))
    pts[np.arange(n), face_axis[faces]] = half_side * face_sign[faces]
    return pts


def _rod_mixed_bumps(n, rng, sphere_near):
    """Thin rod along x with a sphere bump and a cube bump on its positive half.

    The two classes swap which surface type sits at x=0.35 versus x=0.75.
    Sizes and point counts are matched, so pooling statistics taken over the
    whole cloud barely move; only spatially resolved pooling sees which local
    pattern lives where."""
    n_bump = max(8, int(0.22 * n))
    n_rod = n - 2 * n_bump
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n_rod)
    rod = np.column_stack([rng.uniform(-1.0, 1.0, size=n_rod),
                           0.07 * np.cos(theta), 0.07 * np.sin(theta)])
    radius = 0.17 * (1.0 + rng.uniform(-0.15, 0.15))
    positions = (0.35, 0.75) if sphere_near else (0.75, 0.35)
    sphere = _unit_sphere(n_bump, rng) * radius
    sphere[:, 0] += positions[0] + rng.uniform(-0.04, 0.04)
    # half-side chosen so the cube's mean radial extent matches the sphere's
    cube = _cube_shell(n_bump, rng, radius / 1.28)
    cube[:, 0] += positions[1] + rng.uniform(-0.04, 0.04)
    return np.vstack([rod, sphere, cube])


def _plate_mixed_bumps(n, rng, sphere_near):
    """Plate with one hemisphere bump and one half-cube bump on its positive-x
    half; classes swap which type sits near versus far (see _rod_mixed_bumps)."""
    n_bump = max(8, int(0.22 * n))
    n_plate = n - 2 * n_bump
    half = np.array([0.8, 0.5]) * (1.0 + rng.uniform(-0.1, 0.1, size=2))
    plate = np.zeros((n_plate, 3))
    plate[:, :2] = rng.uniform(-1.0, 1.0, size=(n_plate, 2)) * half
    radius = 0.16 * (1.0 + rng.uniform(-0.15, 0.15))
    positions = (0.25, 0.7) if sphere_near else (0.7, 0.25)
    hemi = _unit_sphere(n_bump, rng) * radius
    hemi[:, 2] = np.abs(hemi[:, 2])
    hemi[:, 0] += positions[0] * half[0] + rng.uniform(-0.03, 0.03)
    cube = _cube_shell(n_bump, rng, radius / 1.28)
    cube[:, 2] = np.abs(cube[:, 2])
    cube[:, 0] += positions[1] * half[0] + rng.uniform(-0.03, 0.03)
    return np.vstack([plate, hemi, cube])


def _dumbbell(n, rng):
    half = n // 2
    a = _unit_sphere(half, rng) * 0.28 + np.array([0.6, 0.0, 0.0])
    b = _unit_sphere(n - half, rng) * 0.28 + np.array([-0.6, 0.0, 0.0])
    return np.vstack([a, b])


def _torus(n, rng):
    major, minor = 0.5, 0.16
    phi = np.empty(n)
    filled = 0
    while filled < n:  # rejection sampling for uniform surface density
        cand = rng.uniform(0.0, 2.0 * np.pi, size=2 * (n - filled))
        keep = cand[rng.random(cand.size) < (major + minor * np.cos(cand)) / (major + minor)]
        take = keep[: n - filled]
        phi[filled:filled + take.size] = take
        filled += take.size
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    ring = major + minor * np.cos(phi)
    return np.column_stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)])


def generic_blob(n, rng, scales=(1.0, 0.6, 0.35)):
    """Skewed anisotropic blob: non-degenerate spectrum and clearly non-zero
    third moment along every axis, i.e. a "generic" cloud for canonicalization."""
    shape = 3.0
    raw = (rng.gamma(shape, size=(n, 3)) - shape) / np.sqrt(shape)
    return raw * (np.asarray(scales) * _axis_jitter(rng))


SHAPES = {
    "sphere": _sphere,
    "box": _box,
    "cylinder": _cylinder,
    "plane": _plane,
    "rod_sphere_near": lambda n, rng: _rod_mixed_bumps(n, rng, True),
    "rod_sphere_far": lambda n, rng: _rod_mixed_bumps(n, rng, False),
    "plate_sphere_near": lambda n, rng: _plate_mixed_bumps(n, rng, True),
    "plate_sphere_far": lambda n, rng: _plate_mixed_bumps(n, rng, False),
    "dumbbell": _dumbbell,
    "torus": _torus,
    "blob": generic_blob,
}

FOUR_CLASSES = ("sphere", "box", "cylinder", "plane")
TEN_CLASSES = ("sphere", "box", "cylinder", "plane", "rod_sphere_near", "rod_sphere_far",
               "plate_sphere_near", "plate_sphere_far", "dumbbell", "torus")


def make_cloud(kind: str, n_points: int, seed, noise: float = DEFAULT_NOISE,
               label: int | None = None) -> PointCloud:
    """One synthetic cloud of the given shape family, deterministic per seed."""
    if kind not in SHAPES:
        raise ValueError(f"unknown shape kind {kind!r}; choose from {sorted(SHAPES)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pts = SHAPES[kind](n_points, rng)
    if noise > 0:
        pts = pts + rng.normal(scale=noise, size=pts.shape)
    return PointCloud(pts, label=label)


def write_dataset(root, class_kinds, per_class: int, n_points: int, seed: int,
                  noise: float = DEFAULT_NOISE) -> DatasetManifest:
    """Write per-class XYZ files plus a manifest under `root`; returns the manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for label, kind in enumerate(class_kinds):
        for j in range(per_class):
            cloud = make_cloud(kind, n_points, derive_seed(seed, kind, j), noise=noise)
            rel = f"{kind}_{j:04d}.xyz"
            save_xyz(root / rel, cloud.points)
            entries.append((rel, label))
    manifest = DatasetManifest(entries=entries, class_names=list(class_kinds), root=root)
    manifest.save(root / "manifest.csv")
    return manifest
