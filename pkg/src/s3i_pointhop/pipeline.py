"""End-to-end orchestration: fit, evaluate, predict, and model serialization.

Training is two streaming passes over the manifest (one to accumulate Saab
statistics, one to pool descriptors) so full datasets never sit in memory as
raw per-point features.
"""

from __future__ import annotations

import hashlib
import io as _io
import json
import logging
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .alignment import canonicalize
from .classifier import LinearModel, fit_classifier, predict
from .dft import SelectionConfig, select_features
from .errors import ChecksumError, ConfigError, ModelFormatError
from .features import FeatureConfig, TOTAL_WIDTH, compute_point_features
from .geometry import (PointCloud, ROTATION_PROTOCOLS, apply_rotation, derive_seed,
                       normalize, random_rotation)
from .io import DatasetManifest, load_cloud_file
from .neighbors import NeighborIndex
from .regions import CloudDescriptor, aggregate_global, aggregate_regional, build_regions
from .saab import SaabModel, SaabStats, apply_saab

logger = logging.getLogger("s3i_pointhop")

MODEL_MAGIC = b"S3I1"
MODEL_FORMAT_VERSION = 1
_CHUNK_CLOUDS = 64


@dataclass
class PipelineConfig:
    """Every knob of the pipeline; serialized verbatim into trained models."""

    points_per_cloud: int = 1024
    features: FeatureConfig = field(default_factory=FeatureConfig)
    saab_channels: int = 40
    aggregation: str = "local"  # local (24 regions x 5 stats) | global (4 stats)
    use_geometric: bool = True
    use_covariance: bool = True
    use_octant: bool = True
    dft_enabled: bool = True
    num_selected: int = 2700
    num_candidate_thresholds: int = 31
    ridge: float | None = None  # None -> data-relative default
    train_rotation: str = "none"
    test_rotation: str = "none"
    seed: int = 0

    def validate(self) -> None:
        if not (self.use_geometric or self.use_covariance or self.use_octant):
            raise ConfigError("at least one feature set must be enabled")
        if self.aggregation not in ("local", "global"):
            raise ConfigError(f"aggregation must be local or global, got {self.aggregation!r}")
        for proto in (self.train_rotation, self.test_rotation):
            if proto not in ROTATION_PROTOCOLS:
                raise ConfigError(f"unknown rotation protocol {proto!r}")
        if not 1 <= self.saab_channels <= TOTAL_WIDTH:
            raise ConfigError(f"saab_channels must be in [1, {TOTAL_WIDTH}]")
        if self.points_per_cloud < 2:
            raise ConfigError("points_per_cloud must be >= 2")
        if self.num_selected < 1:
            raise ConfigError("num_selected must be >= 1")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigError("ridge must be >= 0")

    @property
    def descriptor_dim(self) -> int:
        if self.aggregation == "global":
            return 4 * self.saab_channels
        return len(build_regions()) * 5 * self.saab_channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        data["features"] = FeatureConfig(**data.get("features", {}))
        return cls(**data)


@dataclass
class TrainedModel:
    """Everything needed to classify a cloud, serializable to one file."""

    config: PipelineConfig
    saab: SaabModel
    selected: np.ndarray | None
    linear: LinearModel
    class_names: list[str]
    format_version: int = MODEL_FORMAT_VERSION


@dataclass
class EvaluationResult:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray  # rows = true class, columns = predicted
    class_names: list[str]

    def to_text(self) -> str:
        lines = [f"overall accuracy: {self.accuracy:.4f}"]
        for i, name in enumerate(self.class_names):
            total = int(self.confusion[i].sum())
            if total == 0:
                lines.append(f"  {name}: n/a (no samples)")
            else:
                lines.append(f"  {name}: {self.per_class_accuracy[i]:.4f} "
                             f"({int(self.confusion[i, i])}/{total})")
        return "\n".join(lines)

    def csv_rows(self) -> list[list[str]]:
        rows = [["class", "accuracy", "support"]]
        for i, name in enumerate(self.class_names):
            total = int(self.confusion[i].sum())
            acc = "" if total == 0 else f"{self.per_class_accuracy[i]:.6f}"
            rows.append([name, acc, str(total)])
        rows.append(["overall", f"{self.accuracy:.6f}", str(int(self.confusion.sum()))])
        return rows


def _pmap(fn, items, threads):
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _chunks(seq, size):
    for start in range(0, len(seq), size):
        yield seq[start:start + size]


def load_prepared_cloud(manifest: DatasetManifest, position: int, config: PipelineConfig,
                        protocol: str, seed: int | None = None) -> PointCloud:
    """Load one manifest entry: sample (OFF only), normalize, rotate.

    The sampling and rotation streams are derived from the entry path, not its
    position, so reordering a manifest never changes individual clouds.
    """
    raw_path, label = manifest.entries[position]
    master = config.seed if seed is None else seed
    cloud = load_cloud_file(manifest.resolve(raw_path), config.points_per_cloud,
                            derive_seed(master, raw_path, "sample"), label=label)
    cloud = normalize(cloud)
    if protocol != "none":
        rotation = random_rotation(protocol, derive_seed(master, raw_path, "rotate"))
        cloud = apply_rotation(cloud, rotation)
    return cloud


def extract_pointwise(aligned_points: np.ndarray, config: PipelineConfig,
                      index: NeighborIndex | None = None) -> np.ndarray:
    """(N, 68) feature rows for an already-canonicalized cloud."""
    return compute_point_features(
        aligned_points, config.features,
        use_octant=config.use_octant,
        use_covariance=config.use_covariance,
        use_geometric=config.use_geometric,
        index=index)


def extract_descriptor(cloud: PointCloud, config: PipelineConfig,
                       saab_model: SaabModel) -> CloudDescriptor:
    """Canonicalize, featurize, reduce, and pool one cloud into its descriptor."""
    aligned, frame = canonicalize(cloud)
    index = NeighborIndex(aligned.points)
    rows = extract_pointwise(aligned.points, config, index=index)
    responses = apply_saab(saab_model, rows)
    if config.aggregation == "global":
        descriptor = CloudDescriptor(
            values=aggregate_global(responses),
            provenance={"aggregation": "global", "num_channels": config.saab_channels})
    else:
        descriptor = aggregate_regional(responses, aligned.points)
    descriptor.provenance["degenerate_alignment"] = frame.degenerate
    return descriptor


def _selected_columns(model: TrainedModel, values: np.ndarray) -> np.ndarray:
    return values if model.selected is None else values[..., model.selected]


def predict_cloud(model: TrainedModel, cloud: PointCloud):
    """(class index, score vector) for one cloud."""
    descriptor = extract_descriptor(cloud, model.config, model.saab)
    return predict(model.linear, _selected_columns(model, descriptor.values))


def fit_pipeline(manifest: DatasetManifest, config: PipelineConfig,
                 threads: int | None = None) -> TrainedModel:
    """Train the full pipeline from a manifest.

    Stages: stream per-point features to fit the Saab kernels, pool per-cloud
    descriptors, rank and select columns with the discriminant feature test
    (unless disabled), then fit the linear classifier. Deterministic given the
    config seed.
    """
    config.validate()
    labels = np.array([label for _, label in manifest.entries], dtype=np.int64)
    present = np.unique(labels)
    if present.size < 2:
        raise ValueError("training manifest must cover at least 2 classes")
    missing = sorted(set(range(manifest.num_classes)) - set(present.tolist()))
    if missing:
        names = ", ".join(manifest.class_names[i] for i in missing)
        raise ValueError(f"classes with no training samples: {names}")
    if config.dft_enabled and config.num_selected > config.descriptor_dim:
        raise ValueError(f"num_selected={config.num_selected} exceeds descriptor "
                         f"dimension {config.descriptor_dim}")

    positions = list(range(len(manifest)))

    def cloud_rows(position):
        cloud = load_prepared_cloud(manifest, position, config, config.train_rotation)
        aligned, _ = canonicalize(cloud)
        return extract_pointwise(aligned.points, config)

    t0 = time.monotonic()
    stats = SaabStats(TOTAL_WIDTH)
    for chunk in _chunks(positions, _CHUNK_CLOUDS):
        for rows in _pmap(cloud_rows, chunk, threads):
            stats.update(rows)
    saab_model = stats.finalize(num_channels=config.saab_channels)
    t1 = time.monotonic()
    logger.info("saab fit: %d rows from %d clouds in %.1fs", stats.count, len(manifest), t1 - t0)

    def cloud_descriptor(position):
        cloud = load_prepared_cloud(manifest, position, config, config.train_rotation)
        return extract_descriptor(cloud, config, saab_model).values

    descriptors = np.empty((len(manifest), config.descriptor_dim))
    for chunk in _chunks(positions, _CHUNK_CLOUDS):
        for pos, values in zip(chunk, _pmap(cloud_descriptor, chunk, threads)):
            descriptors[pos] = values
    t2 = time.monotonic()
    logger.info("descriptors: %d x %d in %.1fs", *descriptors.shape, t2 - t1)

    selected = None
    if config.dft_enabled:
        selected = select_features(
            descriptors, labels,
            SelectionConfig(num_selected=config.num_selected,
                            num_candidate_thresholds=config.num_candidate_thresholds))
        descriptors = descriptors[:, selected]
    t3 = time.monotonic()
    logger.info("feature selection: kept %d columns in %.1fs", descriptors.shape[1], t3 - t2)

    linear = fit_classifier(descriptors, labels, ridge=config.ridge,
                            class_count=manifest.num_classes)
    train_pred, _ = predict(linear, descriptors)
    train_acc = float((train_pred == labels).mean())
    t4 = time.monotonic()
    logger.info("classifier fit in %.1fs; training accuracy %.4f", t4 - t3, train_acc)

    return TrainedModel(config=replace(config), saab=saab_model, selected=selected,
                        linear=linear, class_names=list(manifest.class_names))


def evaluate(model: TrainedModel, manifest: DatasetManifest, protocol: str | None = None,
             seed: int | None = None, threads: int | None = None) -> EvaluationResult:
    """Accuracy, per-class accuracy, and confusion matrix on a test manifest."""
    if protocol is None:
        protocol = model.config.test_rotation
    if protocol not in ROTATION_PROTOCOLS:
        raise ValueError(f"unknown rotation protocol {protocol!r}")
    class_count = model.linear.class_count
    labels = np.array([label for _, label in manifest.entries], dtype=np.int64)
    if labels.max() >= class_count:
        raise ValueError("test manifest has labels outside the model's class set")

    def cloud_features(position):
        cloud = load_prepared_cloud(manifest, position, model.config, protocol, seed=seed)
        descriptor = extract_descriptor(cloud, model.config, model.saab)
        return _selected_columns(model, descriptor.values)

    rows = []
    for chunk in _chunks(list(range(len(manifest))), _CHUNK_CLOUDS):
        rows.extend(_pmap(cloud_features, chunk, threads))
    predictions, _ = predict(model.linear, np.vstack(rows))

    confusion = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    support = confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        per_class = np.where(support > 0, np.diag(confusion) / np.maximum(support, 1), np.nan)
    return EvaluationResult(
        accuracy=float((predictions == labels).mean()),
        per_class_accuracy=per_class,
        confusion=confusion,
        class_names=list(model.class_names))


# ---------------------------------------------------------------------------
# Model file format: MAGIC, u32 version, u32 record count, named records
# (u16 name length, name, u8 kind, u8 ndim, u64 dims, payload), then a
# trailing SHA-256 over everything before it. Tensors are little-endian
# float64/int64 so files round-trip exactly.
# ---------------------------------------------------------------------------

_KIND_JSON = 0
_KIND_F64 = 1
_KIND_I64 = 2


def _write_record(buf, name: str, kind: int, payload: bytes, shape=()):
    raw_name = name.encode()
    buf.write(struct.pack("<H", len(raw_name)))
    buf.write(raw_name)
    buf.write(struct.pack("<BB", kind, len(shape)))
    for dim in shape:
        buf.write(struct.pack("<Q", dim))
    buf.write(struct.pack("<Q", len(payload)))
    buf.write(payload)


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def model_to_bytes(model: TrainedModel) -> bytes:
    records: list[tuple[str, int, bytes, tuple]] = [
        ("config", _KIND_JSON, _json_bytes(model.config.to_dict()), ()),
        ("class_names", _KIND_JSON, _json_bytes(model.class_names), ()),
        ("saab_meta", _KIND_JSON, _json_bytes({
            "num_channels": model.saab.num_channels,
            "bias": model.saab.bias,
            "rank_deficient": model.saab.rank_deficient}), ()),
        ("classifier_meta", _KIND_JSON, _json_bytes({
            "class_count": model.linear.class_count}), ()),
    ]
    tensors = [
        ("saab_mean", model.saab.feature_mean),
        ("saab_dc", model.saab.dc_kernel),
        ("saab_ac", model.saab.ac_kernels),
        ("saab_energies", model.saab.energies),
        ("weights", model.linear.weights),
    ]
    for name, tensor in tensors:
        arr = np.ascontiguousarray(tensor, dtype="<f8")
        records.append((name, _KIND_F64, arr.tobytes(), arr.shape))
    if model.selected is not None:
        arr = np.ascontiguousarray(model.selected, dtype="<i8")
        records.append(("selected", _KIND_I64, arr.tobytes(), arr.shape))

    buf = _io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<I", model.format_version))
    buf.write(struct.pack("<I", len(records)))
    for name, kind, payload, shape in records:
        _write_record(buf, name, kind, payload, shape)
    body = buf.getvalue()
    return body + hashlib.sha256(body).digest()


def model_from_bytes(blob: bytes) -> TrainedModel:
    if len(blob) < len(MODEL_MAGIC) + 8 + 32:
        raise ModelFormatError("file too short to be a model")
    if blob[:4] != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {blob[:4]!r}, expected {MODEL_MAGIC!r}")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError("model file failed its checksum (truncated or corrupted)")
    version, count = struct.unpack_from("<II", body, 4)
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")

    offset = 12
    records: dict[str, object] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", body, offset)
        offset += 2
        name = body[offset:offset + name_len].decode()
        offset += name_len
        kind, ndim = struct.unpack_from("<BB", body, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}Q", body, offset) if ndim else ()
        offset += 8 * ndim
        (size,) = struct.unpack_from("<Q", body, offset)
        offset += 8
        payload = body[offset:offset + size]
        offset += size
        if kind == _KIND_JSON:
            records[name] = json.loads(payload.decode())
        elif kind == _KIND_F64:
            records[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
        elif kind == _KIND_I64:
            records[name] = np.frombuffer(payload, dtype="<i8").astype(np.int64).reshape(shape)
        else:
            raise ModelFormatError(f"unknown record kind {kind}")

    try:
        config = PipelineConfig.from_dict(records["config"])
        saab_meta = records["saab_meta"]
        saab_model = SaabModel(
            feature_mean=records["saab_mean"],
            dc_kernel=records["saab_dc"],
            ac_kernels=records["saab_ac"],
            energies=records["saab_energies"],
            num_channels=int(saab_meta["num_channels"]),
            bias=float(saab_meta["bias"]),
            rank_deficient=bool(saab_meta["rank_deficient"]))
        linear = LinearModel(weights=records["weights"],
                             class_count=int(records["classifier_meta"]["class_count"]))
        class_names = list(records["class_names"])
    except KeyError as exc:
        raise ModelFormatError(f"model file missing record {exc}") from None
    selected = records.get("selected")
    return TrainedModel(config=config, saab=saab_model, selected=selected,
                        linear=linear, class_names=class_names, format_version=version)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
