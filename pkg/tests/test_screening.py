import numpy as np
import pytest

from lorsmap import (
    EqtlDataset,
    SimScenario,
    hc_screening,
    lors_screening,
    no_screening,
    simulate_dataset,
    subset_dataset,
)


def noise_dataset(seed=0, n=40, p=60, q=30):
    ds, _ = simulate_dataset(
        SimScenario(n=n, p=p, q=q, rank_L=0, n_causal=0, noise_sd=1.0, seed=seed)
    )
    return ds


class TestLorsScreening:
    def test_keep_all(self, rng):
        ds = noise_dataset(1, n=12, p=8, q=15)
        sr = lors_screening(ds, keep_per_gene=ds.p)
        np.testing.assert_array_equal(sr.kept_snp_indices, np.arange(ds.p))

    def test_perfectly_correlated_snp_is_kept(self, rng):
        n, p, q = 20, 10, 12
        X = rng.integers(0, 3, size=(n, p)).astype(float)
        Y = rng.standard_normal((n, q))
        Y[:, 4] = X[:, 7]  # gene 4 duplicates SNP 7
        ds = EqtlDataset(Y=Y, X=X)
        sr = lors_screening(ds, keep_per_gene=1)
        assert 7 in sr.kept_snp_indices
        assert sr.scores[7] == pytest.approx(1.0, abs=1e-12)

    def test_union_is_monotone_in_keep_per_gene(self):
        ds = noise_dataset(2)
        kept_small = set(lors_screening(ds, keep_per_gene=3).kept_snp_indices)
        kept_large = set(lors_screening(ds, keep_per_gene=10).kept_snp_indices)
        assert kept_small <= kept_large

    def test_constant_snp_scores_zero(self, rng):
        n, q = 15, 12
        X = rng.integers(0, 3, size=(n, 4)).astype(float)
        X[:, 2] = 1.0
        ds = EqtlDataset(Y=rng.standard_normal((n, q)), X=X)
        sr = lors_screening(ds, keep_per_gene=4)
        assert sr.scores[2] == 0.0

    def test_default_keep_is_sample_count(self):
        ds = noise_dataset(3, n=10, p=50, q=8)
        sr = lors_screening(ds)
        # every gene contributes at most n SNPs
        assert sr.kept_snp_indices.size <= min(ds.p, ds.n * ds.q)

    def test_bounds_checked(self):
        ds = noise_dataset(4, n=8, p=6, q=12)
        with pytest.raises(ValueError):
            lors_screening(ds, keep_per_gene=0)
        with pytest.raises(ValueError):
            lors_screening(ds, keep_per_gene=7)

    def test_does_not_touch_y(self):
        ds = noise_dataset(5)
        before = ds.Y.copy()
        lors_screening(ds, keep_per_gene=5)
        np.testing.assert_array_equal(ds.Y, before)


class TestHcScreening:
    def test_pure_noise_keeps_few(self):
        ds = noise_dataset(11, n=50, p=100, q=50)
        sr = hc_screening(ds, alpha0=0.1, seed=0)
        assert sr.kept_snp_indices.size <= 0.10 * ds.p

    def test_multi_gene_signal_snp_is_kept(self):
        rng = np.random.default_rng(7)
        n, p, q = 60, 40, 100
        ds0 = noise_dataset(12, n=n, p=p, q=q)
        Y = np.array(ds0.Y)
        # SNP 5 moderately shifts 20 of the 100 genes
        for j in range(20):
            Y[:, j] += 0.8 * ds0.X[:, 5] + 0.05 * rng.standard_normal(n)
        ds = EqtlDataset(Y=Y, X=ds0.X)
        sr = hc_screening(ds, alpha0=0.1, seed=0)
        assert 5 in sr.kept_snp_indices

    def test_flat_pvalue_snp_never_kept(self, rng):
        n, q = 30, 20
        X = rng.integers(0, 3, size=(n, 6)).astype(float)
        X[:, 3] = 2.0  # monomorphic: p-values pinned at 1, HC score <= 0
        ds = EqtlDataset(Y=rng.standard_normal((n, q)), X=X)
        sr = hc_screening(ds, alpha0=0.2, seed=1)
        assert sr.scores[3] <= 0.0
        assert 3 not in sr.kept_snp_indices

    def test_determinism(self):
        ds = noise_dataset(13, n=30, p=40, q=25)
        sr1 = hc_screening(ds, seed=5)
        sr2 = hc_screening(ds, seed=5)
        np.testing.assert_array_equal(sr1.kept_snp_indices, sr2.kept_snp_indices)
        np.testing.assert_array_equal(sr1.scores, sr2.scores)

    def test_small_q_rejected(self):
        ds = noise_dataset(14, n=20, p=10, q=5)
        with pytest.raises(ValueError):
            hc_screening(ds)

    def test_alpha0_bounds(self):
        ds = noise_dataset(15, n=20, p=10, q=12)
        with pytest.raises(ValueError):
            hc_screening(ds, alpha0=0.0)
        with pytest.raises(ValueError):
            hc_screening(ds, alpha0=0.6)


class TestSubsetDataset:
    def test_keep_all_is_identity(self):
        ds = noise_dataset(21, n=10, p=8, q=12)
        sr = no_screening(ds)
        sub = subset_dataset(ds, sr)
        assert sub.p == ds.p
        np.testing.assert_array_equal(sub.X, ds.X)
        np.testing.assert_array_equal(sub.Y, ds.Y)

    def test_subset_preserves_order(self, rng):
        ds = noise_dataset(22, n=10, p=6, q=12)
        sr = no_screening(ds)
        sr.kept_snp_indices = np.array([2, 5])
        sub = subset_dataset(ds, sr)
        assert sub.p == 2
        np.testing.assert_array_equal(sub.X, ds.X[:, [2, 5]])
        assert sub.snp_ids == [ds.snp_ids[2], ds.snp_ids[5]]
        assert sub.gene_ids == ds.gene_ids

    def test_empty_keep_set_guides_user(self):
        ds = noise_dataset(23, n=10, p=6, q=12)
        sr = no_screening(ds)
        sr.kept_snp_indices = np.array([], dtype=int)
        with pytest.raises(ValueError, match="screening"):
            subset_dataset(ds, sr)

    def test_out_of_range_indices_rejected(self):
        ds = noise_dataset(24, n=10, p=6, q=12)
        sr = no_screening(ds)
        sr.kept_snp_indices = np.array([0, 99])
        with pytest.raises(ValueError):
            subset_dataset(ds, sr)
