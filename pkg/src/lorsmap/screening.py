"""Pre-screening to reduce the SNP count before joint modeling.

Two methods are provided.  Marginal-correlation screening keeps, for each
gene, the SNPs with the largest absolute sample correlation and takes the
union over genes.  Higher-criticism screening aggregates each SNP's whole
spectrum of per-gene association p-values into a single HC score and keeps
SNPs whose score exceeds a permutation-calibrated threshold, which favors
SNPs with many weak associations (trans-like signals) as well as strong
single-gene ones.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import EqtlDataset

HC_PVALUE_CLIP = 1e-15
HC_PERMUTATIONS = 20
HC_NULL_PERCENTILE = 95.0


@dataclass
class ScreeningResult:
    kept_snp_indices: np.ndarray
    scores: np.ndarray
    method: str

    def __post_init__(self):
        self.kept_snp_indices = np.unique(np.asarray(self.kept_snp_indices, dtype=int))
        self.scores = np.asarray(self.scores, dtype=float)
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("screening scores contain non-finite values")


def _abs_correlations(X, Y):
    """|corr(X_k, Y_j)| for every SNP-gene pair; constant columns score 0."""
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    xn = np.linalg.norm(Xc, axis=0)
    yn = np.linalg.norm(Yc, axis=0)
    xn_safe = np.where(xn > 0, xn, 1.0)
    yn_safe = np.where(yn > 0, yn, 1.0)
    C = np.abs((Xc / xn_safe).T @ (Yc / yn_safe))
    C[xn == 0, :] = 0.0
    C[:, yn == 0] = 0.0
    return np.minimum(C, 1.0)


def no_screening(ds):
    """Pass-through result that keeps every SNP."""
    return ScreeningResult(
        kept_snp_indices=np.arange(ds.p), scores=np.zeros(ds.p), method="none"
    )


def lors_screening(ds, keep_per_gene=None):
    """Keep the top keep_per_gene SNPs per gene by |correlation|, then take the union.

    keep_per_gene defaults to the sample count n, so each gene's retained
    design is at most full rank.  The reported per-SNP score is the maximum
    |correlation| across genes.
    """
    keep_per_gene = ds.n if keep_per_gene is None else int(keep_per_gene)
    if not 1 <= keep_per_gene <= ds.p:
        raise ValueError(f"keep_per_gene must be in [1, {ds.p}], got {keep_per_gene}")
    C = _abs_correlations(ds.X, ds.Y)
    if keep_per_gene >= ds.p:
        kept = np.arange(ds.p)
    else:
        top = np.argpartition(-C, keep_per_gene - 1, axis=0)[:keep_per_gene, :]
        kept = np.unique(top)
    return ScreeningResult(kept_snp_indices=kept, scores=C.max(axis=1), method="lors_screening")


def _marginal_pvalues(X, Y):
    """Two-sided p-values for the simple-regression slope of each gene on each SNP.

    Uses the t statistic t = r * sqrt((n-2) / (1-r^2)) with n-2 degrees of
    freedom; monomorphic SNPs get p = 1 for every gene.
    """
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 samples for slope t-tests")
    C = _abs_correlations(X, Y)
    r2 = np.minimum(C**2, 1.0 - 1e-12)
    t = C * np.sqrt((n - 2) / (1.0 - r2))
    pvals = 2.0 * stats.t.sf(t, df=n - 2)
    xn = np.linalg.norm(X - X.mean(axis=0), axis=0)
    pvals[xn == 0, :] = 1.0
    return np.clip(pvals, HC_PVALUE_CLIP, 1.0 - HC_PVALUE_CLIP)


def _hc_scores(pvals, alpha0):
    """Higher-criticism score per row of an ordered p-value matrix."""
    q = pvals.shape[1]
    ps = np.sort(pvals, axis=1)
    i_max = max(1, int(np.floor(alpha0 * q)))
    ps = ps[:, :i_max]
    frac = np.arange(1, i_max + 1) / q
    hc = np.sqrt(q) * (frac[None, :] - ps) / np.sqrt(ps * (1.0 - ps))
    return hc.max(axis=1)


def hc_screening(ds, alpha0=0.1, seed=0, n_permutations=HC_PERMUTATIONS):
    """Keep SNPs whose higher-criticism score beats a permutation null.

    Each SNP's HC score scans the smallest alpha0 fraction of its ordered
    per-gene p-values.  The retention threshold is the 95th percentile of
    the max-over-SNPs score across n_permutations datasets in which every
    expression column is independently permuted (and never below zero, so
    a SNP with a nonpositive score is never kept).  Permutations use
    per-permutation generators spawned from the seed, so the result does
    not depend on evaluation order.
    """
    if not 0 < alpha0 <= 0.5:
        raise ValueError(f"alpha0 must be in (0, 0.5], got {alpha0}")
    if ds.q < 10:
        raise ValueError(f"higher-criticism screening needs at least 10 genes, got {ds.q}")
    scores = _hc_scores(_marginal_pvalues(ds.X, ds.Y), alpha0)
    children = np.random.SeedSequence(seed).spawn(n_permutations)
    null_max = np.empty(n_permutations)
    for b, child in enumerate(children):
        rng = np.random.Generator(np.random.Philox(child))
        Y_perm = rng.permuted(ds.Y, axis=0)
        null_max[b] = _hc_scores(_marginal_pvalues(ds.X, Y_perm), alpha0).max()
    threshold = max(float(np.percentile(null_max, HC_NULL_PERCENTILE)), 0.0)
    kept = np.flatnonzero(scores > threshold)
    return ScreeningResult(kept_snp_indices=kept, scores=scores, method="hc_screening")


def subset_dataset(ds, sr):
    """Restrict the dataset's SNPs to a screening result's kept set."""
    kept = sr.kept_snp_indices
    if kept.size == 0:
        raise ValueError(
            "screening kept no SNPs; lower the screening threshold or run with screening disabled"
        )
    if kept.min() < 0 or kept.max() >= ds.p:
        raise ValueError(f"kept SNP indices out of range [0, {ds.p})")
    if kept.size == ds.p:
        return ds
    return EqtlDataset(
        Y=ds.Y,
        X=ds.X[:, kept],
        gene_ids=ds.gene_ids,
        snp_ids=[ds.snp_ids[k] for k in kept],
        sample_ids=ds.sample_ids,
    )
