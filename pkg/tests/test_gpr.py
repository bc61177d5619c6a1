"""GP posterior over bootstrap curves: kernel form, hand checks, smoothing."""

import numpy as np
import pytest

from dream.errors import ValidationError
from dream.gpr import (
    CurveEnsemble,
    gp_solve,
    CurveGrid,
    confidence_bands,
    gpr_posterior,
    rbf_kernel,
    read_curves_csv,
    write_curves_csv,
)
from dream.nam import SubnetSpec, init_model


class TestKernel:
    def test_zero_distance_is_one(self):
        K = rbf_kernel([0.3], [0.3], 0.5)
        np.testing.assert_array_equal(K, [[1.0]])

    def test_printed_form_uses_unsquared_distance(self):
        # |x - x'| = 2, l = 1 -> exp(-2 / 2) = e^-1
        K = rbf_kernel([0.0], [2.0], 1.0)
        np.testing.assert_allclose(K[0, 0], np.exp(-1.0), rtol=0, atol=1e-15)

    def test_squared_variant(self):
        K = rbf_kernel([0.0], [2.0], 1.0, squared=True)
        np.testing.assert_allclose(K[0, 0], np.exp(-2.0), rtol=0, atol=1e-15)

    def test_monotone_decay(self):
        d = np.linspace(0, 3, 31)
        K = rbf_kernel([0.0], d, 0.7)[0]
        assert (np.diff(K) < 0).all()

    def test_symmetry_and_unit_diagonal(self):
        x = np.linspace(0, 1, 9)
        K = rbf_kernel(x, x, 0.2)
        np.testing.assert_array_equal(K, K.T)
        np.testing.assert_array_equal(np.diag(K), np.ones(9))

    def test_nonpositive_length_scale_rejected(self):
        with pytest.raises(ValidationError):
            rbf_kernel([0.0], [1.0], 0.0)


class TestCurveGrid:
    def test_build_equidistant(self):
        g = CurveGrid.build(0, 0.0, 1.0, 11)
        assert g.n == 11
        np.testing.assert_allclose(np.diff(g.x), 0.1, rtol=0, atol=1e-15)

    def test_rejects_non_equidistant(self):
        with pytest.raises(ValidationError):
            CurveGrid(0, np.array([0.0, 0.1, 0.3]))

    def test_rejects_short_grid(self):
        with pytest.raises(ValidationError):
            CurveGrid.build(0, 0.0, 1.0, 1)


class TestPosterior:
    def test_single_point_hand_check(self):
        # one observation, prior mean forced 0: K=[[1]], mu = f/2, cov = 1/2
        for f in (0.8, -1.3, 2.0):
            mean, cov = gp_solve([0.5], [f], [0.5], length_scale=0.1,
                                 prior_mean=0.0)
            np.testing.assert_allclose(mean, [f / 2.0], rtol=0, atol=1e-12)
            np.testing.assert_allclose(cov, [[0.5]], rtol=0, atol=1e-12)

    def test_zero_rows_give_zero_mean(self):
        grid = CurveGrid.build(0, 0.0, 1.0, 20)
        ens = CurveEnsemble(grid, np.zeros((5, 20)))
        fit = gpr_posterior(ens)
        np.testing.assert_allclose(fit.mean, np.zeros(20), rtol=0, atol=1e-12)

    def test_covariance_symmetric(self):
        rng = np.random.default_rng(3)
        grid = CurveGrid.build(0, 0.0, 1.0, 40)
        rows = np.sin(2 * np.pi * grid.x)[None, :] + 0.1 * rng.normal(size=(5, 40))
        rows -= rows.mean(axis=1, keepdims=True)
        fit = gpr_posterior(CurveEnsemble(grid, rows))
        assert np.abs(fit.cov - fit.cov.T).max() < 1e-10
        assert (fit.sd >= 0).all()

    def test_smoothing_beats_every_single_row(self):
        rng = np.random.default_rng(11)
        grid = CurveGrid.build(0, 0.0, 1.0, 50)
        truth = np.sin(2 * np.pi * grid.x)
        truth = truth - truth.mean()
        rows = truth[None, :] + 0.3 * rng.normal(size=(5, 50))
        rows -= rows.mean(axis=1, keepdims=True)
        fit = gpr_posterior(CurveEnsemble(grid, rows), length_scale=0.1)
        rmse_fit = np.sqrt(np.mean((fit.mean - truth) ** 2))
        rmse_rows = np.sqrt(np.mean((rows - truth) ** 2, axis=1))
        assert rmse_fit < rmse_rows.min()

    def test_interpolation_limit_small_jitter(self):
        # duplicate-free observations + tiny jitter: mean ~ data at the grid
        rng = np.random.default_rng(5)
        grid = CurveGrid.build(0, 0.0, 1.0, 100)
        row = np.sin(2 * np.pi * grid.x) + 0.05 * rng.normal(size=100)
        row = row - row.mean()
        ens = CurveEnsemble(grid, row[None, :])
        fit = gpr_posterior(ens, length_scale=0.1, jitter=1e-8)
        assert np.abs(fit.mean - row).max() < 1e-4

    def test_empty_ensemble_rejected(self):
        grid = CurveGrid.build(0, 0.0, 1.0, 5)
        with pytest.raises(ValidationError):
            gpr_posterior(CurveEnsemble(grid, np.zeros((0, 5))))


class TestBands:
    def test_degenerate_band_when_sd_zero(self):
        grid = CurveGrid.build(0, 0.0, 1.0, 4)
        fit = gpr_posterior(CurveEnsemble(grid, np.zeros((2, 4))))
        fit.sd[:] = 0.0
        lower, upper = confidence_bands(fit)
        np.testing.assert_array_equal(lower, fit.mean)
        np.testing.assert_array_equal(upper, fit.mean)

    def test_band_arithmetic(self):
        grid = CurveGrid.build(0, 0.0, 1.0, 2)
        fit = gpr_posterior(CurveEnsemble(grid, np.zeros((1, 2))))
        fit.mean[:] = 1.0
        fit.sd[:] = 0.5
        lower, upper = confidence_bands(fit)
        np.testing.assert_array_equal(lower, [0.0, 0.0])
        np.testing.assert_array_equal(upper, [2.0, 2.0])

    def test_ordering_everywhere(self):
        rng = np.random.default_rng(8)
        grid = CurveGrid.build(0, 0.0, 1.0, 30)
        rows = rng.normal(size=(4, 30))
        rows -= rows.mean(axis=1, keepdims=True)
        fit = gpr_posterior(CurveEnsemble(grid, rows))
        lower, upper = confidence_bands(fit)
        assert (lower <= fit.mean).all()
        assert (fit.mean <= upper).all()


class TestEnsemble:
    def test_rows_centered_from_models(self):
        rng = np.random.default_rng(1)
        models = [init_model([SubnetSpec((6,))], np.zeros(1), np.ones(1),
                             np.random.default_rng(s)) for s in range(4)]
        grid = CurveGrid.build(0, 0.0, 1.0, 25)
        ens = CurveEnsemble.from_models(models, 0, grid)
        np.testing.assert_allclose(ens.values.mean(axis=1), 0.0,
                                   rtol=0, atol=1e-14)


class TestCurvesCsv:
    def test_round_trip_preserves_grid_and_values(self, tmp_path):
        rng = np.random.default_rng(2)
        grid = CurveGrid.build(1, -0.5, 2.0, 40)
        rows = rng.normal(size=(3, 40))
        rows -= rows.mean(axis=1, keepdims=True)
        ens = CurveEnsemble(grid, rows)
        fit = gpr_posterior(ens, length_scale=0.2)
        path = tmp_path / "curves_k1.csv"
        write_curves_csv(path, fit, ens)
        grid2, mean2, lower2, upper2, rows2 = read_curves_csv(path, covariate=1)
        np.testing.assert_array_equal(grid2.x, grid.x)  # equidistance survives
        np.testing.assert_array_equal(mean2, fit.mean)
        np.testing.assert_array_equal(rows2, rows)
        lo, up = confidence_bands(fit)
        np.testing.assert_array_equal(lower2, lo)
        np.testing.assert_array_equal(upper2, up)
