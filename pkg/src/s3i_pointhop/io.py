"""File ingestion: OFF meshes, XYZ text clouds, and dataset manifests."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyMeshError, MeshParseError
from .geometry import PointCloud, sample_surface

CLASS_NAMES_FILENAME = "classes.txt"


def load_off(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse an ASCII OFF mesh into (vertices, triangle faces).

    Polygon faces with more than three vertices are fan-triangulated. Handles
    the common malformed variant where the vertex/face counts share the header
    line ("OFF492 518 0").
    """
    path = Path(path)
    tokens: list[tuple[str, int]] = []  # (token, line number)
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            for tok in stripped.split():
                tokens.append((tok, lineno))
    if not tokens:
        raise MeshParseError("empty file, expected OFF header", line=1)

    head, head_line = tokens[0]
    if head == "OFF":
        pos = 1
    elif head.startswith("OFF") and head[3:].lstrip("-").isdigit():
        # counts glued to the header keyword
        tokens[0] = (head[3:], head_line)
        pos = 0
    else:
        raise MeshParseError(f"expected OFF header, got {head!r}", line=head_line)

    def next_int(what):
        nonlocal pos
        if pos >= len(tokens):
            raise MeshParseError(f"unexpected end of file while reading {what}",
                                 line=tokens[-1][1])
        tok, line = tokens[pos]
        pos += 1
        try:
            return int(tok), line
        except ValueError:
            raise MeshParseError(f"expected integer {what}, got {tok!r}", line=line) from None

    def next_float(what):
        nonlocal pos
        if pos >= len(tokens):
            raise MeshParseError(f"unexpected end of file while reading {what}",
                                 line=tokens[-1][1])
        tok, line = tokens[pos]
        pos += 1
        try:
            return float(tok), line
        except ValueError:
            raise MeshParseError(f"expected number for {what}, got {tok!r}", line=line) from None

    n_vertices, _ = next_int("vertex count")
    n_faces, _ = next_int("face count")
    next_int("edge count")

    if n_vertices < 1 or n_faces < 1:
        raise EmptyMeshError(f"mesh has {n_vertices} vertices and {n_faces} faces")

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        for j in range(3):
            vertices[i, j], _ = next_float("vertex coordinate")

    triangles: list[tuple[int, int, int]] = []
    for _ in range(n_faces):
        count, count_line = next_int("face vertex count")
        if count < 3:
            raise MeshParseError(f"face has {count} vertices, need >= 3", line=count_line)
        idx = []
        for _ in range(count):
            v, v_line = next_int("face vertex index")
            if v < 0 or v >= n_vertices:
                raise MeshParseError(f"face references vertex {v} out of range", line=v_line)
            idx.append(v)
        for k in range(1, count - 1):
            triangles.append((idx[0], idx[k], idx[k + 1]))

    return vertices, np.asarray(triangles, dtype=np.int64)


def load_xyz(path) -> np.ndarray:
    """Load an (N, 3) cloud from plain text, one "x y z" triple per line."""
    pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if pts.size == 0:
        raise ValueError(f"{path}: empty XYZ file")
    if pts.shape[1] != 3:
        raise ValueError(f"{path}: expected 3 columns per line, got {pts.shape[1]}")
    return pts


def save_xyz(path, points: np.ndarray) -> None:
    # %.17g round-trips float64 exactly
    np.savetxt(path, np.asarray(points, dtype=np.float64), fmt="%.17g")


def load_cloud_file(path, n_points: int, seed, label: int | None = None) -> PointCloud:
    """Load one dataset entry; OFF meshes are surface-sampled, XYZ used as-is."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        vertices, faces = load_off(path)
        cloud = sample_surface(vertices, faces, n_points, seed)
    elif suffix in (".xyz", ".txt"):
        cloud = PointCloud(load_xyz(path))
    else:
        raise ValueError(f"{path}: unsupported cloud format {suffix!r}")
    cloud.label = label
    return cloud


@dataclass
class DatasetManifest:
    """Ordered (path, label) entries plus class names.

    Paths are stored as written in the CSV and resolved relative to `root`
    (the manifest file's directory). Class names come from an optional
    classes.txt sidecar, else default to "class_<i>".
    """

    entries: list[tuple[str, int]]
    class_names: list[str]
    root: Path = Path(".")

    def __post_init__(self):
        seen = set()
        for path, label in self.entries:
            if path in seen:
                raise ValueError(f"duplicate manifest path: {path}")
            seen.add(path)
            if not 0 <= label < len(self.class_names):
                raise ValueError(f"label {label} out of range for {len(self.class_names)} classes")

    def __len__(self):
        return len(self.entries)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.root / p

    @classmethod
    def load(cls, csv_path) -> "DatasetManifest":
        csv_path = Path(csv_path)
        entries = []
        with open(csv_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
                raise ValueError(f"{csv_path}: manifest must start with header 'path,label'")
            for row in reader:
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 2:
                    raise ValueError(f"{csv_path}: malformed row {row!r}")
                entries.append((row[0].strip(), int(row[1])))
        if not entries:
            raise ValueError(f"{csv_path}: manifest has no entries")
        names_file = csv_path.parent / CLASS_NAMES_FILENAME
        if names_file.exists():
            class_names = [ln.strip() for ln in names_file.read_text().splitlines() if ln.strip()]
        else:
            n = max(label for _, label in entries) + 1
            class_names = [f"class_{i}" for i in range(n)]
        return cls(entries=entries, class_names=class_names, root=csv_path.parent)

    def save(self, csv_path) -> None:
        csv_path = Path(csv_path)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "label"])
            writer.writerows(self.entries)
        names_file = csv_path.parent / CLASS_NAMES_FILENAME
        names_file.write_text("".join(f"{name}\n" for name in self.class_names))
