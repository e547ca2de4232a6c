"""Per-gene lasso with an unpenalized intercept.

Solves

    min_{b, mu}  0.5 * ||y - l - X b - 1 mu||_2^2 + rho * ||b||_1

by cyclic coordinate descent with covariance-free residual updates.  The
intercept is re-estimated once per sweep by absorbing the residual mean.
This is the B,mu-step of the alternating solver, called independently for
each gene; calls share no state and may run concurrently.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass
class LassoResult:
    b: np.ndarray
    mu: float
    kkt_violation: float
    sweeps: int
    converged: bool


@njit(cache=True)
def _kkt_violation(X, r, b, rho):
    """Max violation of the stationarity conditions at (b, mu) with residual r."""
    n, p = X.shape
    worst = 0.0
    s = 0.0
    for i in range(n):
        s += r[i]
    worst = abs(s)
    for k in range(p):
        g = 0.0
        for i in range(n):
            g += X[i, k] * r[i]
        if b[k] > 0.0:
            v = abs(g - rho)
        elif b[k] < 0.0:
            v = abs(g + rho)
        else:
            v = abs(g) - rho
            if v < 0.0:
                v = 0.0
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def _cd_kernel(X, y_adj, r, b, mu, rho, tol, max_sweeps, col_sq):
    """Cyclic coordinate descent sweeps; X must be Fortran-ordered.

    r and b are updated in place; r is kept equal to y_adj - X b - mu.
    The sweep loop stops once per-sweep coefficient changes fall below a
    working tolerance AND the true stationarity violation is within tol;
    the working tolerance tightens when the former holds but not the
    latter.  Returns (mu, sweeps, kkt_violation, converged).
    """
    n, p = X.shape
    sweep_tol = tol
    sweeps = 0
    while sweeps < max_sweeps:
        max_delta = 0.0
        # intercept first so coordinates always see a centered residual
        m = 0.0
        for i in range(n):
            m += r[i]
        m /= n
        if m != 0.0:
            mu += m
            for i in range(n):
                r[i] -= m
        if abs(m) > max_delta:
            max_delta = abs(m)
        for k in range(p):
            ck = col_sq[k]
            if ck <= 0.0:
                continue
            bk = b[k]
            g = ck * bk
            for i in range(n):
                g += X[i, k] * r[i]
            if g > rho:
                bk_new = (g - rho) / ck
            elif g < -rho:
                bk_new = (g + rho) / ck
            else:
                bk_new = 0.0
            d = bk_new - bk
            if d != 0.0:
                for i in range(n):
                    r[i] -= X[i, k] * d
                b[k] = bk_new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        sweeps += 1
        if max_delta < sweep_tol:
            # refresh r to shed accumulated drift before the exact check
            for i in range(n):
                r[i] = y_adj[i] - mu
            for k in range(p):
                bk = b[k]
                if bk != 0.0:
                    for i in range(n):
                        r[i] -= X[i, k] * bk
            kkt = _kkt_violation(X, r, b, rho)
            if kkt <= tol:
                return mu, sweeps, kkt, True
            sweep_tol *= 0.1
    kkt = _kkt_violation(X, r, b, rho)
    return mu, sweeps, kkt, False


def lasso_gene(y, X, l, rho, tol=1e-7, max_sweeps=1000, b0=None, mu0=None):
    """Fit one gene's lasso-with-intercept against the factor-adjusted response.

    Parameters
    ----------
    y : (n,) expression values for the gene
    X : (n, p) genotype matrix (not standardized internally)
    l : (n,) hidden-factor column to subtract from y
    rho : positive l1 penalty weight
    tol : stationarity tolerance; on convergence every coordinate satisfies
        its subgradient condition and |sum(residual)| within tol
    max_sweeps : sweep budget; on exhaustion the best iterate is returned
        with converged=False rather than raising
    b0, mu0 : optional warm start (results do not depend on it)
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    y = np.asarray(y, dtype=float).ravel()
    l = np.asarray(l, dtype=float).ravel()
    Xf = np.asfortranarray(X, dtype=float)
    n, p = Xf.shape
    if y.shape[0] != n or l.shape[0] != n:
        raise ValueError(f"y and l must have length {n}, got {y.shape[0]} and {l.shape[0]}")
    b = np.zeros(p) if b0 is None else np.array(b0, dtype=float).ravel()
    if b.shape[0] != p:
        raise ValueError(f"warm start b0 must have length {p}, got {b.shape[0]}")
    mu = 0.0 if mu0 is None else float(mu0)
    y_adj = y - l
    r = y_adj - Xf @ b - mu
    col_sq = np.einsum("ij,ij->j", Xf, Xf)
    mu, sweeps, kkt, converged = _cd_kernel(
        Xf, y_adj, r, b, mu, float(rho), float(tol), int(max_sweeps), col_sq
    )
    return LassoResult(b=b, mu=mu, kkt_violation=float(kkt), sweeps=int(sweeps), converged=bool(converged))
