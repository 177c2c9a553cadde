#!/usr/bin/env python3
"""Full ModelNet40 reproduction: SO(3)/SO(3) with the default configuration.

Expects the standard ModelNet40 layout (one directory per class containing
train/ and test/ subdirectories of OFF meshes):

    ModelNet40/airplane/train/airplane_0001.off
    ModelNet40/airplane/test/airplane_0627.off
    ...

Usage:
    python scripts/reproduce_modelnet40.py /path/to/ModelNet40 [workdir]

This is a multi-hour CPU run; the target accuracy band is 83.10 +/- 2.0.
It is deliberately excluded from the regular test suite (see
tests/test_acceptance.py::TestCriterion7, gated on S3I_MODELNET40_DIR).
"""

import sys
import time
from pathlib import Path

from s3i_pointhop import DatasetManifest, PipelineConfig, evaluate, fit_pipeline, save_model


def build_manifest(modelnet_root: Path, split: str, out_csv: Path) -> DatasetManifest:
    class_dirs = sorted(p for p in modelnet_root.iterdir() if (p / split).is_dir())
    if not class_dirs:
        raise SystemExit(f"{modelnet_root} does not look like a ModelNet40 tree")
    class_names = [p.name for p in class_dirs]
    entries = []
    for label, class_dir in enumerate(class_dirs):
        for mesh in sorted((class_dir / split).glob("*.off")):
            entries.append((str(mesh.resolve()), label))
    manifest = DatasetManifest(entries=entries, class_names=class_names,
                               root=out_csv.parent)
    manifest.save(out_csv)
    return manifest


def run_reproduction(modelnet_dir, workdir) -> float:
    modelnet_root = Path(modelnet_dir)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    train = build_manifest(modelnet_root, "train", workdir / "train_manifest.csv")
    test = build_manifest(modelnet_root, "test", workdir / "test_manifest.csv")
    print(f"train clouds: {len(train)}, test clouds: {len(test)}, "
          f"classes: {train.num_classes}")

    config = PipelineConfig(train_rotation="so3", test_rotation="so3", seed=1)
    started = time.monotonic()
    model = fit_pipeline(train, config)
    save_model(model, workdir / "modelnet40_so3.s3i")
    print(f"fit done in {(time.monotonic() - started) / 60:.1f} min")

    result = evaluate(model, test, protocol="so3")
    print(result.to_text())
    print(f"total {(time.monotonic() - started) / 60:.1f} min")
    return result.accuracy


if __name__ == "__main__":
    if len(sys.argv) < 2:
        raise SystemExit(__doc__)
    work = sys.argv[2] if len(sys.argv) > 2 else "modelnet40_run"
    accuracy = run_reproduction(sys.argv[1], work)
    print(f"SO(3)/SO(3) accuracy: {accuracy:.4f} (target band 0.8310 +/- 0.02)")
