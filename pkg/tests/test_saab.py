import numpy as np
import pytest

from s3i_pointhop.saab import SaabStats, apply_saab, dc_kernel, fit_saab


def random_rows(rng, m=300, dim=68):
    return rng.normal(size=(m, dim)) * rng.uniform(0.5, 2.0, size=dim)


class TestFit:
    def test_constant_rows_have_zero_ac_energy(self, rng):
        rows = np.tile(rng.normal(size=68), (100, 1))
        model = fit_saab(rows, num_channels=10)
        # zero at floating-point precision, relative to the raw row magnitude
        assert np.abs(model.energies[1:]).max() <= 1e-12 * (rows**2).mean()
        assert model.rank_deficient

    def test_isotropic_plane_energies(self, rng):
        # rows live in a 2D isotropic subspace orthogonal to the DC kernel:
        # expect DC energy 0 and two equal AC energies
        dim = 68
        dc = dc_kernel(dim)
        basis = np.zeros((2, dim))
        basis[0, 0], basis[0, 1] = 1.0, -1.0
        basis[1, 2], basis[1, 3] = 1.0, -1.0
        basis[0] /= np.linalg.norm(basis[0])
        basis[1] /= np.linalg.norm(basis[1])
        assert np.abs(basis @ dc).max() <= 1e-15
        coords = rng.normal(size=(5000, 2))
        coords -= coords.mean(axis=0)
        # whiten so both directions carry exactly unit variance
        cov = np.cov(coords.T, bias=True)
        coords = coords @ np.linalg.inv(np.linalg.cholesky(cov)).T
        model = fit_saab(coords @ basis, num_channels=3)
        assert model.energies[0] == pytest.approx(0.0, abs=1e-9)
        assert model.energies[1] == pytest.approx(1.0, abs=1e-9)
        assert model.energies[2] == pytest.approx(1.0, abs=1e-9)

    def test_kernel_gram_matrix(self, rng):
        model = fit_saab(random_rows(rng), num_channels=40)
        kernels = np.vstack([model.dc_kernel, model.ac_kernels])
        gram = kernels @ kernels.T
        assert np.abs(gram - np.eye(kernels.shape[0])).max() <= 1e-8

    def test_energies_descending_over_ac(self, rng):
        model = fit_saab(random_rows(rng), num_channels=68)
        assert (np.diff(model.energies[1:]) <= 1e-12).all()

    def test_rank_deficient_flag_and_zero_fill(self, rng):
        # rank-3 data but 10 channels requested
        factors = rng.normal(size=(200, 3)) @ rng.normal(size=(3, 68))
        model = fit_saab(factors, num_channels=10)
        assert model.rank_deficient
        assert np.abs(model.energies[4:]).max() <= 1e-9 * model.energies[1]

    def test_needs_enough_rows(self, rng):
        with pytest.raises(ValueError):
            fit_saab(rng.normal(size=(10, 68)), num_channels=5)

    def test_energy_threshold_mode(self, rng):
        rows = random_rows(rng)
        full = fit_saab(rows, energy_threshold=1.0)
        half = fit_saab(rows, energy_threshold=0.5)
        assert half.num_channels < full.num_channels
        kept = full.energies[1:]
        assert kept[: half.num_channels - 1].sum() / kept.sum() >= 0.5

    def test_exactly_one_mode(self, rng):
        rows = random_rows(rng)
        with pytest.raises(ValueError):
            fit_saab(rows)
        with pytest.raises(ValueError):
            fit_saab(rows, num_channels=5, energy_threshold=0.9)

    def test_streaming_deterministic_for_fixed_chunks(self, rng):
        rows = random_rows(rng, m=400)
        models = []
        for _ in range(2):
            stats = SaabStats(68)
            stats.update(rows[:150])
            stats.update(rows[150:])
            models.append(stats.finalize(num_channels=20))
        assert models[0].ac_kernels.tobytes() == models[1].ac_kernels.tobytes()
        assert models[0].energies.tobytes() == models[1].energies.tobytes()

    def test_streaming_matches_batch_numerically(self, rng):
        # chunking changes accumulation order, so agreement is to fp precision,
        # not bit-for-bit
        rows = random_rows(rng, m=400)
        batch = fit_saab(rows, num_channels=20)
        stats = SaabStats(68)
        stats.update(rows[:150])
        stats.update(rows[150:])
        streamed = stats.finalize(num_channels=20)
        np.testing.assert_allclose(batch.energies, streamed.energies, rtol=1e-9, atol=1e-12)
        cosines = np.abs((batch.ac_kernels * streamed.ac_kernels).sum(axis=1))
        assert cosines.min() >= 1.0 - 1e-6


class TestApply:
    def test_mean_row_maps_to_zero(self, rng):
        rows = random_rows(rng)
        model = fit_saab(rows, num_channels=40)
        out = apply_saab(model, model.feature_mean[None, :])
        assert np.abs(out).max() <= 1e-12

    def test_norm_preserved_at_full_width(self, rng):
        rows = random_rows(rng)
        model = fit_saab(rows, num_channels=68)
        out = apply_saab(model, rows)
        centered = rows - model.feature_mean
        np.testing.assert_allclose(np.linalg.norm(out, axis=1),
                                   np.linalg.norm(centered, axis=1), atol=1e-9)

    def test_training_variances_match_energies(self, rng):
        rows = random_rows(rng)
        model = fit_saab(rows, num_channels=30)
        out = apply_saab(model, rows)
        np.testing.assert_allclose(out.var(axis=0), model.energies, atol=1e-9)

    def test_total_energy_conserved_at_full_width(self, rng):
        rows = random_rows(rng)
        model = fit_saab(rows, num_channels=68)
        out = apply_saab(model, rows)
        total_in = (rows - rows.mean(axis=0)).var(axis=0).sum()
        assert out.var(axis=0).sum() == pytest.approx(total_in, rel=1e-8)

    def test_affine_combination(self, rng):
        # apply is affine, so it commutes with weight-sum-1 combinations
        rows = random_rows(rng)
        model = fit_saab(rows, num_channels=25)
        x, y = rows[0], rows[1]
        alpha = 0.3
        combo = apply_saab(model, (alpha * x + (1 - alpha) * y)[None, :])
        parts = alpha * apply_saab(model, x[None, :]) + (1 - alpha) * apply_saab(model, y[None, :])
        np.testing.assert_allclose(combo, parts, atol=1e-12)

    def test_column_mismatch_rejected(self, rng):
        model = fit_saab(random_rows(rng), num_channels=5)
        with pytest.raises(ValueError):
            apply_saab(model, rng.normal(size=(3, 67)))
