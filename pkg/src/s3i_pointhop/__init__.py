"""Rotation-invariant single-hop point cloud classification.

Pipeline: PCA canonical alignment, an ensemble of octant / covariance-eigen /
geometric per-point features, one-hop Saab dimension reduction, pooling over
24 conical and spherical regions, discriminant feature selection, and a
linear least squares classifier.
"""

from .alignment import AlignmentFrame, align, canonicalize, fit_frame
from .classifier import LinearModel, fit_classifier, predict
from .dft import DftRecord, SelectionConfig, dft_score, select_features
from .errors import (ChecksumError, ConfigError, DegenerateCloudError, EmptyMeshError,
                     MeshParseError, ModelFormatError, S3IError, ZeroAreaMeshError)
from .features import (FeatureConfig, assemble_features, compute_point_features,
                       eigen_features, geometric_features, octant_features)
from .geometry import (PointCloud, Rotation, apply_rotation, derive_seed, normalize,
                       random_rotation, sample_surface)
from .io import DatasetManifest, load_cloud_file, load_off, load_xyz, save_xyz
from .neighbors import NeighborIndex
from .pipeline import (CloudDescriptor, EvaluationResult, PipelineConfig, TrainedModel,
                       evaluate, extract_descriptor, fit_pipeline, load_model,
                       model_from_bytes, model_to_bytes, predict_cloud, save_model)
from .regions import Region, aggregate_global, aggregate_regional, build_regions
from .saab import SaabModel, SaabStats, apply_saab, fit_saab

__version__ = "0.1.0"

__all__ = [
    "AlignmentFrame", "align", "canonicalize", "fit_frame",
    "LinearModel", "fit_classifier", "predict",
    "DftRecord", "SelectionConfig", "dft_score", "select_features",
    "S3IError", "MeshParseError", "EmptyMeshError", "ZeroAreaMeshError",
    "DegenerateCloudError", "ModelFormatError", "ChecksumError", "ConfigError",
    "FeatureConfig", "assemble_features", "compute_point_features",
    "octant_features", "eigen_features", "geometric_features",
    "PointCloud", "Rotation", "apply_rotation", "derive_seed", "normalize",
    "random_rotation", "sample_surface",
    "DatasetManifest", "load_cloud_file", "load_off", "load_xyz", "save_xyz",
    "NeighborIndex",
    "CloudDescriptor", "EvaluationResult", "PipelineConfig", "TrainedModel",
    "evaluate", "extract_descriptor", "fit_pipeline", "load_model",
    "model_from_bytes", "model_to_bytes", "predict_cloud", "save_model",
    "Region", "aggregate_global", "aggregate_regional", "build_regions",
    "SaabModel", "SaabStats", "apply_saab", "fit_saab",
    "__version__",
]
