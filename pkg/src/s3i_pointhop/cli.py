"""Command-line interface: prepare, fit, eval, and ablate.

Exit codes: 0 success, 1 runtime/data error, 2 usage or configuration error.
An optional key=value config file supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, S3IError
from .features import FeatureConfig
from .geometry import apply_rotation, derive_seed, normalize, random_rotation
from .io import DatasetManifest, load_cloud_file, save_xyz
from .pipeline import PipelineConfig, evaluate, fit_pipeline, load_model, save_model

logger = logging.getLogger("s3i_pointhop")

FEATURE_KEYS = {"geo": "use_geometric", "cov": "use_covariance", "oct": "use_octant"}

ABLATION_ROWS = (
    ("cov_oct", {"use_geometric": False}),
    ("geo_oct", {"use_covariance": False}),
    ("geo_cov", {"use_octant": False}),
    ("full_local", {}),
    ("global_pool", {"aggregation": "global"}),
    ("no_dft", {"dft_enabled": False}),
)

# per-command option schema: dest -> (default, coercion)
_COMMON_FIT = {
    "points": (1024, int),
    "k_geo": (128, int),
    "k_cov": (32, int),
    "k_oct": (64, int),
    "saab_channels": (40, int),
    "dft_top": (2700, int),
    "no_dft": (False, bool),
    "ridge": (None, float),
    "seed": (0, int),
    "threads": (None, int),
}
SCHEMAS = {
    "prepare": {"points": (1024, int), "rotate": ("none", str), "seed": (0, int)},
    "fit": {**_COMMON_FIT, "aggregation": ("local", str), "features": ("geo,cov,oct", str),
            "rotate": ("none", str)},
    "eval": {"rotate": (None, str), "seed": (None, int), "threads": (None, int)},
    "ablate": {**_COMMON_FIT, "rotate_train": ("so3", str), "rotate_test": ("so3", str),
               "grid": ("all", str)},
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key, text, kind):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    if kind is bool:
        if text.lower() in _TRUE:
            return True
        if text.lower() in _FALSE:
            return False
        raise ConfigError(f"config key {key}: expected a boolean, got {text!r}")
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key {key}: cannot parse {text!r} as {kind.__name__}") from None


def _read_config_file(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve_options(args, command):
    """Merge flag > config-file > default for every option in the schema."""
    schema = SCHEMAS[command]
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, (default, kind) in schema.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None and flag_value is not False:
            resolved[key] = flag_value
        elif key in file_values:
            resolved[key] = _coerce(key, file_values[key], kind)
        else:
            resolved[key] = default
    return resolved


def _parse_feature_toggles(text):
    toggles = {field: False for field in FEATURE_KEYS.values()}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if item not in FEATURE_KEYS:
            raise ConfigError(f"unknown feature set {item!r}; choose from geo,cov,oct")
        toggles[FEATURE_KEYS[item]] = True
    if not any(toggles.values()):
        raise ConfigError("--features must enable at least one of geo,cov,oct")
    return toggles


def _pipeline_config(opts, rotation_train="none", rotation_test="none"):
    toggles = _parse_feature_toggles(opts.get("features", "geo,cov,oct"))
    config = PipelineConfig(
        points_per_cloud=opts["points"],
        features=FeatureConfig(k_octant=opts["k_oct"], k_covariance=opts["k_cov"],
                               k_geometric=opts["k_geo"]),
        saab_channels=opts["saab_channels"],
        aggregation=opts.get("aggregation", "local"),
        dft_enabled=not opts["no_dft"],
        num_selected=opts["dft_top"],
        ridge=opts["ridge"],
        train_rotation=rotation_train,
        test_rotation=rotation_test,
        seed=opts["seed"],
        **toggles,
    )
    config.validate()
    return config


def cmd_prepare(args) -> int:
    opts = _resolve_options(args, "prepare")
    manifest = DatasetManifest.load(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    used = set()
    for raw_path, label in manifest.entries:
        rel = Path(raw_path)
        rel = Path(rel.name) if rel.is_absolute() else rel
        rel = rel.with_suffix(".xyz")
        if str(rel) in used:
            rel = rel.with_name(f"{rel.stem}_{len(entries)}.xyz")
        used.add(str(rel))

        cloud = load_cloud_file(manifest.resolve(raw_path), opts["points"],
                                derive_seed(opts["seed"], raw_path, "sample"), label=label)
        cloud = normalize(cloud)
        if opts["rotate"] != "none":
            rotation = random_rotation(opts["rotate"],
                                       derive_seed(opts["seed"], raw_path, "rotate"))
            cloud = apply_rotation(cloud, rotation)
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        save_xyz(target, cloud.points)
        entries.append((str(rel), label))
    DatasetManifest(entries=entries, class_names=manifest.class_names,
                    root=out_dir).save(out_dir / "manifest.csv")
    logger.info("prepared %d clouds into %s (rotate=%s)", len(entries), out_dir, opts["rotate"])
    return 0


def cmd_fit(args) -> int:
    opts = _resolve_options(args, "fit")
    config = _pipeline_config(opts, rotation_train=opts["rotate"])
    manifest = DatasetManifest.load(args.train_manifest)
    model = fit_pipeline(manifest, config, threads=opts["threads"])
    save_model(model, args.model_out)
    logger.info("model written to %s", args.model_out)
    return 0


def cmd_eval(args) -> int:
    opts = _resolve_options(args, "eval")
    model = load_model(args.model)
    manifest = DatasetManifest.load(args.test_manifest)
    result = evaluate(model, manifest, protocol=opts["rotate"], seed=opts["seed"],
                      threads=opts["threads"])
    print(result.to_text())
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(result.csv_rows())
        logger.info("per-class report written to %s", args.csv)
    return 0


def cmd_ablate(args) -> int:
    opts = _resolve_options(args, "ablate")
    base = _pipeline_config({**opts, "aggregation": "local", "features": "geo,cov,oct"},
                            rotation_train=opts["rotate_train"],
                            rotation_test=opts["rotate_test"])
    wanted = [row_id.strip() for row_id in opts["grid"].split(",")] \
        if opts["grid"] != "all" else [row_id for row_id, _ in ABLATION_ROWS]
    known = {row_id for row_id, _ in ABLATION_ROWS}
    bad = set(wanted) - known
    if bad:
        raise ConfigError(f"unknown ablation rows: {', '.join(sorted(bad))}")

    train = DatasetManifest.load(args.train_manifest)
    test = DatasetManifest.load(args.test_manifest)
    rows = [["config_id", "geometric", "covariance", "octant", "aggregation", "dft", "accuracy"]]
    for row_id, overrides in ABLATION_ROWS:
        if row_id not in wanted:
            continue
        config = replace(base, **overrides)
        # a 4*D global descriptor may be narrower than the requested selection
        config = replace(config, num_selected=min(config.num_selected, config.descriptor_dim))
        logger.info("== ablation %s ==", row_id)
        model = fit_pipeline(train, config, threads=opts["threads"])
        result = evaluate(model, test, protocol=opts["rotate_test"], threads=opts["threads"])
        logger.info("%s accuracy: %.4f", row_id, result.accuracy)
        rows.append([row_id,
                     str(int(config.use_geometric)), str(int(config.use_covariance)),
                     str(int(config.use_octant)), config.aggregation,
                     str(int(config.dft_enabled)), f"{result.accuracy:.6f}"])
    with open(args.out, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    logger.info("ablation table written to %s", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="s3i-pointhop",
        description="Rotation-invariant single-hop point cloud classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--seed", type=int, help="master random seed (default 0)")

    p = sub.add_parser("prepare", help="sample/normalize/rotate clouds to XYZ files")
    p.add_argument("manifest", help="CSV manifest with header path,label")
    p.add_argument("out_dir")
    p.add_argument("--points", type=int, help="points per cloud for OFF sampling (default 1024)")
    p.add_argument("--rotate", choices=["none", "z", "so3"],
                   help="rotation protocol (default none)")
    add_common(p)
    p.set_defaults(func=cmd_prepare)

    def add_hyper(p):
        p.add_argument("--points", type=int, help="points per cloud for OFF sampling (default 1024)")
        p.add_argument("--k-geo", dest="k_geo", type=int, help="geometric-feature neighbors (default 128)")
        p.add_argument("--k-cov", dest="k_cov", type=int, help="covariance-feature neighbors (default 32)")
        p.add_argument("--k-oct", dest="k_oct", type=int, help="octant-feature neighbors (default 64)")
        p.add_argument("--saab-channels", dest="saab_channels", type=int,
                       help="retained Saab channels (default 40)")
        p.add_argument("--dft-top", dest="dft_top", type=int,
                       help="features kept by the discriminant feature test (default 2700)")
        p.add_argument("--no-dft", dest="no_dft", action="store_true",
                       help="disable feature selection")
        p.add_argument("--ridge", type=float, help="ridge strength (default: data-relative)")
        p.add_argument("--threads", type=int, help="parallel workers (default: machine cores)")

    p = sub.add_parser("fit", help="train a model from a manifest")
    p.add_argument("train_manifest")
    p.add_argument("model_out")
    add_hyper(p)
    p.add_argument("--aggregation", choices=["local", "global"],
                   help="regional (24 cones/spheres) or global pooling (default local)")
    p.add_argument("--features", help="comma list from geo,cov,oct (default all)")
    p.add_argument("--rotate", choices=["none", "z", "so3"],
                   help="training rotation protocol (default none)")
    add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("model")
    p.add_argument("test_manifest")
    p.add_argument("--rotate", choices=["none", "z", "so3"],
                   help="test rotation protocol (default: from model)")
    p.add_argument("--csv", help="write a per-class CSV report here")
    p.add_argument("--threads", type=int, help="parallel workers (default: machine cores)")
    add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the six standard configuration rows")
    p.add_argument("train_manifest")
    p.add_argument("test_manifest")
    p.add_argument("--out", default="ablation.csv", help="output CSV (default ablation.csv)")
    add_hyper(p)
    p.add_argument("--rotate-train", dest="rotate_train", choices=["none", "z", "so3"],
                   help="training rotation protocol (default so3)")
    p.add_argument("--rotate-test", dest="rotate_test", choices=["none", "z", "so3"],
                   help="test rotation protocol (default so3)")
    p.add_argument("--grid", help="comma list of row ids to run (default all)")
    add_common(p)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (S3IError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
