"""Hyperparameter selection for the penalty weights (rho, lam).

The grid spans, on a log scale, the interval from the smallest weights that
still shrink B (respectively L) to exactly zero down to 1e-3 of those
values.  Two selection procedures are offered: two-fold cross-validation
over samples, and a no-CV procedure that hides a fraction of expression
entries and scores reconstruction on them.

Held-out samples have no hidden-factor estimate, so fold validation error
uses the X B + 1 mu part of the model only.  Entry masking, by contrast,
scores the full reconstruction X B + 1 mu + L because masked entries belong
to fitted samples.
"""

from dataclasses import dataclass

import numpy as np

from .model import EqtlDataset, Hyperparams
from .solvers import SOLVERS, SolverOptions

GRID_SPAN = 1e-3
DEFAULT_MASK_FRACTION = 0.1


@dataclass
class TuningGrid:
    rho_values: np.ndarray
    lambda_values: np.ndarray

    def __post_init__(self):
        self.rho_values = np.asarray(self.rho_values, dtype=float)
        self.lambda_values = np.asarray(self.lambda_values, dtype=float)
        for name, vals in (("rho_values", self.rho_values), ("lambda_values", self.lambda_values)):
            if vals.size == 0:
                raise ValueError(f"{name} is empty")
            if not np.all(vals > 0):
                raise ValueError(f"{name} must be strictly positive")
            if vals.size > 1 and not np.all(np.diff(vals) < 0):
                raise ValueError(f"{name} must be strictly descending")


@dataclass
class TuningResult:
    best: Hyperparams
    cv_errors: np.ndarray
    seed: int
    grid: TuningGrid | None = None


def penalty_ceilings(ds):
    """Smallest (rho, lam) at which the joint fit is fully shrunk.

    rho_max = max_j ||X' (Y_j - mean(Y_j))||_inf; lam_max is the largest
    singular value of column-centered Y.  At (rho_max, lam_max) the solvers
    return B = 0, L = 0, mu = column means.
    """
    Yc = ds.Y - ds.Y.mean(axis=0)
    rho_max = float(np.abs(ds.X.T @ Yc).max())
    lam_max = float(np.linalg.svd(Yc, compute_uv=False)[0])
    return rho_max, lam_max


def build_grid(ds, n_rho=5, n_lambda=5):
    """Log-spaced descending grid from the full-shrinkage ceilings down to 1e-3 of them."""
    if n_rho < 1 or n_lambda < 1:
        raise ValueError("grid sizes must be at least 1")
    rho_max, lam_max = penalty_ceilings(ds)
    if rho_max <= 0 or lam_max <= 0:
        raise ValueError("expression matrix is constant; tuning grid is undefined")
    return TuningGrid(
        rho_values=np.geomspace(rho_max, rho_max * GRID_SPAN, n_rho),
        lambda_values=np.geomspace(lam_max, lam_max * GRID_SPAN, n_lambda),
    )


def _argmin_first(errors):
    """Index of the minimum, keeping the earliest (largest-penalty) cell on ties."""
    flat = np.ravel(errors)
    best = 0
    for i in range(1, flat.size):
        if flat[i] < flat[best]:
            best = i
    return np.unravel_index(best, np.shape(errors))


def _sample_subset(ds, idx):
    return EqtlDataset(
        Y=ds.Y[idx],
        X=ds.X[idx],
        gene_ids=ds.gene_ids,
        snp_ids=ds.snp_ids,
        sample_ids=[ds.sample_ids[i] for i in idx],
    )


def split_two_folds(n, seed):
    """Seeded partition of range(n) into two folds with sizes differing by <= 1."""
    rng = np.random.Generator(np.random.Philox(seed))
    perm = rng.permutation(n)
    half = (n + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def two_fold_cv(ds, grid, seed=0, opts=None, method="fastlors"):
    """Select (rho, lam) by two-fold cross-validation over samples.

    Samples are split into two near-equal folds by a seeded shuffle.  For
    every grid cell the model is fit on each fold and scored on the other
    with ||Y_test - X_test B - 1 mu||_F^2; the cell with the smallest summed
    error wins, with ties broken toward larger rho, then larger lam.
    """
    if ds.n < 4:
        raise ValueError(f"two-fold cross-validation needs at least 4 samples, got {ds.n}")
    opts = opts if opts is not None else SolverOptions()
    solve = SOLVERS[method]
    folds = split_two_folds(ds.n, seed)
    subsets = [_sample_subset(ds, idx) for idx in folds]
    errors = np.zeros((grid.rho_values.size, grid.lambda_values.size))
    for a, rho in enumerate(grid.rho_values):
        for l, lam in enumerate(grid.lambda_values):
            hp = Hyperparams(rho=rho, lam=lam)
            err = 0.0
            for train, test in ((0, 1), (1, 0)):
                fit, _ = solve(subsets[train], hp, opts)
                resid = subsets[test].Y - subsets[test].X @ fit.B - fit.mu[None, :]
                err += float(np.sum(resid * resid))
            errors[a, l] = err
    a, l = _argmin_first(errors)
    best = Hyperparams(rho=float(grid.rho_values[a]), lam=float(grid.lambda_values[l]))
    return TuningResult(best=best, cv_errors=errors, seed=seed, grid=grid)


def _masked_fit_error(ds, mask, Y_imputed, hp, opts, solve):
    ds_masked = EqtlDataset(
        Y=Y_imputed, X=ds.X, gene_ids=ds.gene_ids, snp_ids=ds.snp_ids, sample_ids=ds.sample_ids
    )
    fit, _ = solve(ds_masked, hp, opts)
    recon = ds.X @ fit.B + fit.mu[None, :] + fit.L
    diff = ds.Y[mask] - recon[mask]
    return float(np.sum(diff * diff))


def tune_no_cv(ds, grid, seed=0, opts=None, method="fastlors", mask_fraction=DEFAULT_MASK_FRACTION):
    """Select (rho, lam) by hidden-entry reconstruction instead of fold CV.

    A seeded 10% of Y's entries are hidden (replaced by their column means
    of the visible entries) for fitting.  First lam is chosen, at the grid's
    median rho, to minimize squared reconstruction error of X B + 1 mu + L
    on the hidden entries; then rho is chosen the same way with lam fixed.
    cv_errors holds the evaluated row and column of the grid; cells never
    visited are NaN.
    """
    if ds.n < 4:
        raise ValueError(f"tuning needs at least 4 samples, got {ds.n}")
    if not 0 < mask_fraction < 1:
        raise ValueError(f"mask_fraction must be in (0, 1), got {mask_fraction}")
    opts = opts if opts is not None else SolverOptions()
    solve = SOLVERS[method]
    rng = np.random.Generator(np.random.Philox(seed))
    n_mask = max(1, int(round(mask_fraction * ds.n * ds.q)))
    flat = rng.choice(ds.n * ds.q, size=n_mask, replace=False)
    mask = np.zeros((ds.n, ds.q), dtype=bool)
    mask.flat[flat] = True

    Y_imputed = np.array(ds.Y)
    overall_mean = float(ds.Y[~mask].mean()) if np.any(~mask) else 0.0
    for j in range(ds.q):
        visible = ~mask[:, j]
        fill = float(ds.Y[visible, j].mean()) if np.any(visible) else overall_mean
        Y_imputed[mask[:, j], j] = fill

    n_rho = grid.rho_values.size
    n_lambda = grid.lambda_values.size
    errors = np.full((n_rho, n_lambda), np.nan)
    med = (n_rho - 1) // 2
    rho_med = float(grid.rho_values[med])

    for l, lam in enumerate(grid.lambda_values):
        errors[med, l] = _masked_fit_error(
            ds, mask, Y_imputed, Hyperparams(rho=rho_med, lam=lam), opts, solve
        )
    (best_l,) = _argmin_first(errors[med, :])
    lam_best = float(grid.lambda_values[best_l])

    for a, rho in enumerate(grid.rho_values):
        if np.isnan(errors[a, best_l]):
            errors[a, best_l] = _masked_fit_error(
                ds, mask, Y_imputed, Hyperparams(rho=rho, lam=lam_best), opts, solve
            )
    col = errors[:, best_l]
    (best_a,) = _argmin_first(col)
    best = Hyperparams(rho=float(grid.rho_values[best_a]), lam=lam_best)
    return TuningResult(best=best, cv_errors=errors, seed=seed, grid=grid)
