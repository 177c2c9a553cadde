import numpy as np
import pytest

from s3i_pointhop.errors import ChecksumError, DegenerateCloudError, ModelFormatError
from s3i_pointhop.features import FeatureConfig
from s3i_pointhop.geometry import PointCloud, apply_rotation, random_rotation
from s3i_pointhop.pipeline import (MODEL_MAGIC, PipelineConfig, evaluate, extract_descriptor,
                                   fit_pipeline, load_model, model_from_bytes, model_to_bytes,
                                   predict_cloud, save_model)
from s3i_pointhop.saab import fit_saab
from s3i_pointhop.synthetic import make_cloud, write_dataset

from conftest import make_generic_cloud

SMALL_FEATURES = FeatureConfig(k_octant=16, k_covariance=8, k_geometric=24)


def small_config(**overrides):
    defaults = dict(points_per_cloud=128, features=SMALL_FEATURES, saab_channels=12,
                    num_selected=200, seed=3)
    defaults.update(overrides)
    return PipelineConfig(**defaults)


@pytest.fixture(scope="module")
def toy_task(tmp_path_factory):
    """Two easily separable classes, written as XYZ files + manifests."""
    root = tmp_path_factory.mktemp("toy")
    train = write_dataset(root / "train", ("sphere", "plane"), per_class=12,
                          n_points=128, seed=101)
    test = write_dataset(root / "test", ("sphere", "plane"), per_class=6,
                         n_points=128, seed=202)
    return train, test


@pytest.fixture(scope="module")
def toy_model(toy_task):
    train, _ = toy_task
    return fit_pipeline(train, small_config(train_rotation="so3", test_rotation="so3"))


def quick_saab(config, seeds=range(6)):
    from s3i_pointhop.alignment import canonicalize
    from s3i_pointhop.pipeline import extract_pointwise
    rows = []
    for seed in seeds:
        aligned, _ = canonicalize(make_generic_cloud(seed, n=config.points_per_cloud))
        rows.append(extract_pointwise(aligned.points, config))
    return fit_saab(np.vstack(rows), num_channels=config.saab_channels)


class TestDescriptor:
    def test_default_descriptor_length(self):
        config = PipelineConfig()
        assert config.descriptor_dim == 24 * 5 * 40 == 4800
        assert config.num_selected == 2700

    def test_global_descriptor_length(self):
        config = PipelineConfig(aggregation="global")
        assert config.descriptor_dim == 4 * 40 == 160

    def test_small_config_lengths(self):
        config = small_config()
        saab = quick_saab(config)
        cloud = make_generic_cloud(33, n=128)
        descriptor = extract_descriptor(cloud, config, saab)
        assert descriptor.values.shape == (24 * 5 * 12,)
        global_desc = extract_descriptor(cloud, small_config(aggregation="global"), saab)
        assert global_desc.values.shape == (4 * 12,)

    def test_rotation_invariance(self):
        config = small_config()
        saab = quick_saab(config)
        for seed in range(5):
            cloud = make_generic_cloud(50 + seed, n=128)
            base = extract_descriptor(cloud, config, saab).values
            for rot_seed in range(3):
                rotated = apply_rotation(cloud, random_rotation("so3", rot_seed))
                values = extract_descriptor(rotated, config, saab).values
                assert np.abs(values - base).max() <= 1e-5

    def test_degenerate_cloud_propagates(self):
        config = small_config()
        saab = quick_saab(config)
        with pytest.raises(DegenerateCloudError):
            extract_descriptor(PointCloud(np.full((128, 3), 1.0)), config, saab)

    def test_single_hop_per_feature_set(self, monkeypatch):
        # exactly one kNN pass per enabled feature block and one index build
        from s3i_pointhop import neighbors
        calls = {"build": 0, "query": 0}
        original_init = neighbors.NeighborIndex.__init__
        original_query = neighbors.NeighborIndex.query_all

        def counting_init(self, points):
            calls["build"] += 1
            original_init(self, points)

        def counting_query(self, k, include_self=True):
            calls["query"] += 1
            return original_query(self, k, include_self)

        monkeypatch.setattr(neighbors.NeighborIndex, "__init__", counting_init)
        monkeypatch.setattr(neighbors.NeighborIndex, "query_all", counting_query)
        config = small_config()
        saab = quick_saab(config)
        calls.update(build=0, query=0)
        extract_descriptor(make_generic_cloud(1, n=128), config, saab)
        assert calls == {"build": 1, "query": 3}


class TestFit:
    def test_synthetic_two_class_accuracy(self, toy_task, toy_model):
        train, _ = toy_task
        result = evaluate(toy_model, train, protocol="so3")
        assert result.accuracy >= 0.95

    def test_refit_same_seed_identical_bytes(self, toy_task):
        train, _ = toy_task
        config = small_config(train_rotation="z")
        a = model_to_bytes(fit_pipeline(train, config))
        b = model_to_bytes(fit_pipeline(train, config))
        assert a == b

    def test_thread_count_does_not_change_model(self, toy_task):
        train, _ = toy_task
        config = small_config()
        serial = model_to_bytes(fit_pipeline(train, config, threads=1))
        threaded = model_to_bytes(fit_pipeline(train, config, threads=4))
        assert serial == threaded

    def test_needs_two_classes(self, tmp_path):
        lonely = write_dataset(tmp_path / "one", ("sphere",), per_class=4,
                               n_points=128, seed=7)
        with pytest.raises(ValueError):
            fit_pipeline(lonely, small_config())

    def test_missing_class_rejected(self, toy_task):
        # a class name with zero training entries is an error, not a silent gap
        train, _ = toy_task
        crippled = type(train)(entries=list(train.entries),
                               class_names=train.class_names + ["ghost"],
                               root=train.root)
        with pytest.raises(ValueError, match="no training samples"):
            fit_pipeline(crippled, small_config())

    def test_selection_underflow_rejected(self, toy_task):
        train, _ = toy_task
        config = small_config(aggregation="global", num_selected=2700)
        with pytest.raises(ValueError, match="num_selected"):
            fit_pipeline(train, config)

    def test_dft_disabled_keeps_all_columns(self, toy_task):
        train, _ = toy_task
        model = fit_pipeline(train, small_config(dft_enabled=False))
        assert model.selected is None
        assert model.linear.weights.shape[0] == small_config().descriptor_dim + 1


class TestEvaluate:
    def test_train_split_of_separable_task(self, toy_task, toy_model):
        train, test = toy_task
        result = evaluate(toy_model, test, protocol="so3")
        assert result.accuracy == 1.0
        assert result.confusion.sum() == len(test)
        assert result.confusion.trace() == len(test)

    def test_prediction_invariant_to_fresh_rotations(self, toy_task, toy_model):
        _, test = toy_task
        from s3i_pointhop.pipeline import load_prepared_cloud
        for position in range(0, len(test), 3):
            cloud = load_prepared_cloud(test, position, toy_model.config, "none")
            label, scores = predict_cloud(toy_model, cloud)
            top2 = np.sort(scores)[-2:]
            margin = top2[1] - top2[0]
            for rot_seed in range(3):
                rotated = apply_rotation(cloud, random_rotation("so3", rot_seed))
                relabel, _ = predict_cloud(toy_model, rotated)
                if margin > 1e-6:
                    assert relabel == label

    def test_incompatible_labels_rejected(self, toy_model, tmp_path):
        bad = write_dataset(tmp_path / "bad", ("sphere", "plane", "box"), per_class=2,
                            n_points=128, seed=5)
        with pytest.raises(ValueError, match="class set"):
            evaluate(toy_model, bad)

    def test_report_formatting(self, toy_task, toy_model):
        _, test = toy_task
        result = evaluate(toy_model, test, protocol="z")
        text = result.to_text()
        assert "overall accuracy" in text and "sphere" in text
        rows = result.csv_rows()
        assert rows[0] == ["class", "accuracy", "support"]
        assert len(rows) == 2 + len(test.class_names)


class TestSerialization:
    def test_roundtrip_exact(self, toy_model, tmp_path):
        path = tmp_path / "model.s3i"
        save_model(toy_model, path)
        loaded = load_model(path)
        assert loaded.config == toy_model.config
        assert loaded.class_names == toy_model.class_names
        for attr in ("feature_mean", "dc_kernel", "ac_kernels", "energies"):
            np.testing.assert_array_equal(getattr(loaded.saab, attr),
                                          getattr(toy_model.saab, attr))
        np.testing.assert_array_equal(loaded.selected, toy_model.selected)
        np.testing.assert_array_equal(loaded.linear.weights, toy_model.linear.weights)

    def test_predictions_survive_roundtrip(self, toy_model):
        loaded = model_from_bytes(model_to_bytes(toy_model))
        for seed in range(10):
            cloud = make_cloud("sphere" if seed % 2 else "plane", 128, seed)
            assert predict_cloud(loaded, cloud)[0] == predict_cloud(toy_model, cloud)[0]

    def test_truncated_file_fails_checksum(self, toy_model):
        blob = model_to_bytes(toy_model)
        with pytest.raises(ChecksumError):
            model_from_bytes(blob[:-10])

    def test_corrupted_payload_fails_checksum(self, toy_model):
        blob = bytearray(model_to_bytes(toy_model))
        blob[100] ^= 0xFF
        with pytest.raises(ChecksumError):
            model_from_bytes(bytes(blob))

    def test_bad_magic(self, toy_model):
        blob = bytearray(model_to_bytes(toy_model))
        blob[:4] = b"NOPE"
        with pytest.raises(ModelFormatError):
            model_from_bytes(bytes(blob))

    def test_version_mismatch(self, toy_model):
        import hashlib
        blob = bytearray(model_to_bytes(toy_model))[:-32]
        blob[4] = 99  # little-endian version field
        blob = bytes(blob)
        with pytest.raises(ModelFormatError, match="version"):
            model_from_bytes(blob + hashlib.sha256(blob).digest())

    def test_magic_constant(self):
        assert MODEL_MAGIC == b"S3I1"
