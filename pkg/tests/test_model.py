import numpy as np
import pytest

from lorsmap import (
    EqtlDataset,
    Hyperparams,
    ModelFit,
    grad_smooth,
    l1_norm,
    lipschitz_steps,
    nuclear_norm,
    objective,
    residual,
)
from conftest import random_dataset, random_fit
from oracles import central_differences, naive_residual, power_iteration_sq_norm


def zero_fit(ds):
    return ModelFit(B=np.zeros((ds.p, ds.q)), L=np.zeros((ds.n, ds.q)), mu=np.zeros(ds.q))


class TestTypes:
    def test_dataset_rejects_mismatched_rows(self, rng):
        with pytest.raises(ValueError):
            EqtlDataset(Y=rng.standard_normal((4, 2)), X=rng.standard_normal((5, 3)))

    def test_dataset_rejects_nonfinite(self, rng):
        Y = rng.standard_normal((4, 2))
        Y[1, 1] = np.inf
        with pytest.raises(ValueError):
            EqtlDataset(Y=Y, X=rng.standard_normal((4, 3)))

    def test_dataset_rejects_bad_labels(self, rng):
        with pytest.raises(ValueError):
            EqtlDataset(
                Y=rng.standard_normal((4, 2)), X=rng.standard_normal((4, 3)), gene_ids=["only_one"]
            )

    def test_dataset_needs_two_samples(self, rng):
        with pytest.raises(ValueError):
            EqtlDataset(Y=rng.standard_normal((1, 2)), X=rng.standard_normal((1, 3)))

    def test_hyperparams_positive(self):
        with pytest.raises(ValueError):
            Hyperparams(rho=0.0, lam=1.0)
        with pytest.raises(ValueError):
            Hyperparams(rho=1.0, lam=-2.0)

    def test_fit_shape_consistency(self, rng):
        with pytest.raises(ValueError):
            ModelFit(B=np.zeros((3, 2)), L=np.zeros((4, 2)), mu=np.zeros(5))


class TestResidual:
    def test_zero_fit_returns_y(self, rng):
        ds = random_dataset(rng)
        np.testing.assert_array_equal(residual(ds, zero_fit(ds)), ds.Y)

    def test_exact_model_gives_zero(self, rng):
        n, p, q = 5, 4, 3
        X = rng.standard_normal((n, p))
        fit = random_fit(rng, n, p, q)
        Y = X @ fit.B + fit.mu[None, :] + fit.L
        ds = EqtlDataset(Y=Y, X=X)
        np.testing.assert_allclose(residual(ds, fit), 0.0, atol=1e-12)

    def test_matches_naive_loop_oracle(self, rng):
        n, p, q = 4, 5, 3
        ds = random_dataset(rng, n=n, p=p, q=q)
        fit = random_fit(rng, n, p, q)
        expected = naive_residual(ds.Y, ds.X, fit.B, fit.mu, fit.L)
        np.testing.assert_allclose(residual(ds, fit), expected, atol=1e-12)

    def test_dimension_mismatch_raises(self, rng):
        ds = random_dataset(rng, n=5, p=4, q=3)
        bad = random_fit(rng, n=5, p=4 + 1, q=3)
        with pytest.raises(ValueError):
            residual(ds, bad)


class TestObjective:
    def test_all_zero_is_zero(self):
        ds = EqtlDataset(Y=np.zeros((3, 2)), X=np.zeros((3, 4)))
        hp = Hyperparams(rho=1.0, lam=1.0)
        assert objective(ds, zero_fit(ds), hp) == 0.0

    def test_zero_fit_is_half_y_norm(self, rng):
        ds = random_dataset(rng)
        hp = Hyperparams(rho=2.0, lam=3.0)
        assert objective(ds, zero_fit(ds), hp) == pytest.approx(
            0.5 * np.sum(ds.Y**2), rel=1e-14
        )

    def test_term_by_term_composition(self, rng):
        n, p, q = 3, 4, 2
        ds = random_dataset(rng, n=n, p=p, q=q)
        fit = random_fit(rng, n, p, q)
        hp = Hyperparams(rho=0.7, lam=1.3)
        r = residual(ds, fit)
        expected = 0.5 * np.sum(r * r) + hp.rho * l1_norm(fit.B) + hp.lam * nuclear_norm(fit.L)
        assert objective(ds, fit, hp) == pytest.approx(expected, rel=1e-14)

    def test_nonnegative(self, rng):
        for _ in range(10):
            ds = random_dataset(rng)
            fit = random_fit(rng, ds.n, ds.p, ds.q)
            assert objective(ds, fit, Hyperparams(rho=0.5, lam=0.5)) >= 0.0

    def test_datafit_term_invariant_under_mu_shift(self, rng):
        # moving a row constant between L and mu leaves the residual unchanged
        ds = random_dataset(rng, n=5, p=3, q=4)
        fit = random_fit(rng, 5, 3, 4)
        c = rng.standard_normal(4)
        shifted = ModelFit(B=fit.B, L=fit.L + c[None, :], mu=fit.mu - c)
        r0 = residual(ds, fit)
        r1 = residual(ds, shifted)
        assert 0.5 * np.sum(r0**2) == pytest.approx(0.5 * np.sum(r1**2), rel=1e-12)
        # but the full objective moves with the nuclear norm
        hp = Hyperparams(rho=1.0, lam=1.0)
        assert objective(ds, fit, hp) != pytest.approx(objective(ds, shifted, hp), rel=1e-12)


class TestGradSmooth:
    def test_zero_residual_gives_zero_gradients(self, rng):
        n, p, q = 5, 4, 3
        X = rng.standard_normal((n, p))
        fit = random_fit(rng, n, p, q)
        ds = EqtlDataset(Y=X @ fit.B + fit.mu[None, :] + fit.L, X=X)
        gB, gMu, gL = grad_smooth(ds, fit)
        np.testing.assert_allclose(gB, 0.0, atol=1e-12)
        np.testing.assert_allclose(gMu, 0.0, atol=1e-12)
        np.testing.assert_allclose(gL, 0.0, atol=1e-12)

    def test_zero_fit_gradient_in_l_is_minus_y(self, rng):
        ds = random_dataset(rng)
        _, _, gL = grad_smooth(ds, zero_fit(ds))
        np.testing.assert_array_equal(gL, -ds.Y)

    def test_matches_finite_differences(self, rng):
        n, p, q = 5, 4, 3
        ds = random_dataset(rng, n=n, p=p, q=q)
        fit = random_fit(rng, n, p, q)
        gB, gMu, gL = grad_smooth(ds, fit)

        def smooth(B=fit.B, mu=fit.mu, L=fit.L):
            r = ds.Y - ds.X @ B - mu[None, :] - L
            return 0.5 * float(np.sum(r * r))

        fd_B = central_differences(lambda B: smooth(B=B), fit.B.copy())
        fd_mu = central_differences(lambda mu: smooth(mu=mu), fit.mu.copy())
        fd_L = central_differences(lambda L: smooth(L=L), fit.L.copy())
        for got, want in ((gB, fd_B), (gMu, fd_mu), (gL, fd_L)):
            denom = max(np.max(np.abs(want)), 1.0)
            assert np.max(np.abs(got - want)) / denom < 1e-6


class TestLipschitzSteps:
    def test_identity_design(self):
        n = 4
        ds = EqtlDataset(Y=np.arange(8.0).reshape(4, 2), X=np.eye(n))
        tL, tB, tMu = lipschitz_steps(ds)
        assert tL == 1.0
        assert tB == pytest.approx(1.0, rel=1e-12)
        assert tMu == 0.25

    def test_tmu_is_inverse_n(self, rng):
        ds = random_dataset(rng, n=10, p=3, q=2)
        assert lipschitz_steps(ds)[2] == pytest.approx(0.1, rel=1e-15)

    def test_tb_matches_power_iteration_oracle(self, rng):
        ds = random_dataset(rng, n=8, p=5, q=2)
        _, tB, _ = lipschitz_steps(ds)
        lam_max = power_iteration_sq_norm(ds.X)
        assert 1.0 / tB == pytest.approx(lam_max, rel=1e-8)

    def test_zero_design_rejected(self):
        ds = EqtlDataset(Y=np.ones((3, 2)), X=np.zeros((3, 2)))
        with pytest.raises(ValueError):
            lipschitz_steps(ds)
