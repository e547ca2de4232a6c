"""Data model for joint sparse-regression / hidden-factor fitting.

Expression Y (n samples x q genes) is modeled as

    Y = 1 mu + X B + L + noise

with X the n x p genotype matrix, B a sparse p x q coefficient matrix,
L an n x q low-rank matrix of hidden factors and mu a length-q intercept
row.  The penalized objective is

    0.5 * ||Y - X B - 1 mu - L||_F^2 + rho * ||B||_1 + lambda * ||L||_*
"""

from dataclasses import dataclass, field

import numpy as np

from .prox import l1_norm, nuclear_norm


def as_matrix(a, name="matrix"):
    """Validate a as a finite 2-D float array and return it read-only."""
    out = np.array(a, dtype=float)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {out.ndim}-D")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    out.flags.writeable = False
    return out


def as_vector(a, name="vector"):
    """Validate a as a finite 1-D float array and return it read-only."""
    out = np.array(a, dtype=float).ravel()
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    out.flags.writeable = False
    return out


@dataclass
class EqtlDataset:
    """Expression matrix Y (n x q), genotype matrix X (n x p) and labels.

    Genotype entries are dosages in {0, 1, 2} or real values after
    imputation.  Row i of Y and row i of X describe the same sample.
    """

    Y: np.ndarray
    X: np.ndarray
    gene_ids: list = field(default_factory=list)
    snp_ids: list = field(default_factory=list)
    sample_ids: list | None = None

    def __post_init__(self):
        self.Y = as_matrix(self.Y, "Y")
        self.X = as_matrix(self.X, "X")
        if self.Y.shape[0] != self.X.shape[0]:
            raise ValueError(
                f"Y and X must have the same number of sample rows, "
                f"got {self.Y.shape[0]} and {self.X.shape[0]}"
            )
        if self.Y.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if not self.gene_ids:
            self.gene_ids = [f"gene{j + 1}" for j in range(self.Y.shape[1])]
        if not self.snp_ids:
            self.snp_ids = [f"snp{k + 1}" for k in range(self.X.shape[1])]
        if len(self.gene_ids) != self.Y.shape[1]:
            raise ValueError(f"{len(self.gene_ids)} gene labels for {self.Y.shape[1]} genes")
        if len(self.snp_ids) != self.X.shape[1]:
            raise ValueError(f"{len(self.snp_ids)} SNP labels for {self.X.shape[1]} SNPs")
        if self.sample_ids is None:
            self.sample_ids = [f"sample{i + 1}" for i in range(self.Y.shape[0])]
        if len(self.sample_ids) != self.Y.shape[0]:
            raise ValueError(f"{len(self.sample_ids)} sample labels for {self.Y.shape[0]} samples")

    @property
    def n(self):
        return self.Y.shape[0]

    @property
    def q(self):
        return self.Y.shape[1]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass
class ModelFit:
    """Estimated coefficients B (p x q), hidden factors L (n x q), intercepts mu (q,)."""

    B: np.ndarray
    L: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.B = as_matrix(self.B, "B")
        self.L = as_matrix(self.L, "L")
        self.mu = as_vector(self.mu, "mu")
        if self.L.shape[1] != self.B.shape[1] or self.mu.shape[0] != self.B.shape[1]:
            raise ValueError(
                f"inconsistent gene dimensions: B {self.B.shape}, L {self.L.shape}, "
                f"mu length {self.mu.shape[0]}"
            )


@dataclass(frozen=True)
class Hyperparams:
    """Penalty weights: rho on ||B||_1, lam on the nuclear norm of L."""

    rho: float
    lam: float

    def __post_init__(self):
        if not (self.rho > 0 and np.isfinite(self.rho)):
            raise ValueError(f"rho must be a positive finite number, got {self.rho}")
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError(f"lam must be a positive finite number, got {self.lam}")


def _check_fit_shapes(ds, fit):
    if fit.B.shape != (ds.p, ds.q):
        raise ValueError(f"B has shape {fit.B.shape}, expected {(ds.p, ds.q)}")
    if fit.L.shape != (ds.n, ds.q):
        raise ValueError(f"L has shape {fit.L.shape}, expected {(ds.n, ds.q)}")
    if fit.mu.shape != (ds.q,):
        raise ValueError(f"mu has length {fit.mu.shape[0]}, expected {ds.q}")


def residual(ds, fit):
    """R = Y - X B - 1 mu - L, shape n x q."""
    _check_fit_shapes(ds, fit)
    return _residual_raw(ds.Y, ds.X, fit.B, fit.mu, fit.L)


def _residual_raw(Y, X, B, mu, L):
    return Y - X @ B - mu[None, :] - L


def objective(ds, fit, hp):
    """Penalized objective 0.5*||R||_F^2 + rho*||B||_1 + lam*||L||_*."""
    _check_fit_shapes(ds, fit)
    return _objective_raw(ds.Y, ds.X, fit.B, fit.mu, fit.L, hp.rho, hp.lam)


def _objective_raw(Y, X, B, mu, L, rho, lam):
    r = _residual_raw(Y, X, B, mu, L)
    return 0.5 * float(np.sum(r * r)) + rho * l1_norm(B) + lam * nuclear_norm(L)


def grad_smooth(ds, fit):
    """Gradients of the smooth data-fit term 0.5*||R||_F^2.

    Returns (gB, gMu, gL) with gB = -X' R (p x q), gMu = -1' R (q,),
    gL = -R (n x q).
    """
    r = residual(ds, fit)
    return -ds.X.T @ r, -r.sum(axis=0), -r


def lipschitz_steps(ds):
    """Fixed step sizes (tL, tB, tMu) for the proximal-gradient solver.

    tL = 1 (the gradient in L is 1-Lipschitz), tB = 1/sigma_max(X)^2,
    tMu = 1/n.  Raises ValueError for an all-zero X.
    """
    smax = float(np.linalg.svd(ds.X, compute_uv=False)[0])
    if smax <= 0:
        raise ValueError("X is all zeros; step sizes are undefined")
    return 1.0, 1.0 / smax**2, 1.0 / ds.n
