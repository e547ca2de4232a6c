"""The two joint-modeling solvers and eQTL extraction.

Both solvers minimize

    0.5 * ||Y - X B - 1 mu - L||_F^2 + rho * ||B||_1 + lam * ||L||_*

from the common start B = 0, mu = column means of Y, L = 0, and stop when
the relative objective change drops below rel_tol or max_iter is reached.

lors_solve alternates exact block minimizations: a singular-value-threshold
update of L followed by one lasso-with-intercept per gene.

fastlors_solve takes proximal-gradient steps on each block (L, then B, then
mu) with fixed Lipschitz step sizes, recomputing gradients after every block
update.  If a full iteration fails to strictly decrease the objective, the
iteration is redone from its starting state with the exact block updates
("fallback"), which keeps the recorded objective sequence decreasing.

Solvers are deterministic: repeated runs on the same inputs produce
identical traces.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .lasso import lasso_gene
from .model import ModelFit, _objective_raw, lipschitz_steps
from .prox import soft_threshold, svt

STEP_PROXIMAL = "proximal"
STEP_FALLBACK = "fallback"

_STEP_POLICIES = ("fixed_lipschitz", "backtracking")


@dataclass
class SolverOptions:
    max_iter: int = 100
    rel_tol: float = 1e-4
    step_policy: str = "fixed_lipschitz"
    record_trace: bool = True
    lasso_tol: float = 1e-7
    lasso_max_sweeps: int = 1000

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.step_policy not in _STEP_POLICIES:
            raise ValueError(f"step_policy must be one of {_STEP_POLICIES}, got {self.step_policy!r}")


@dataclass
class SolverTrace:
    """Per-iteration record of one solve.

    objective_values holds the initial objective plus one value per
    iteration; rel_changes[k] = |obj[k+1] - obj[k]| / max(|obj[k]|, 1).
    """

    objective_values: list = field(default_factory=list)
    rel_changes: list = field(default_factory=list)
    step_kinds: list = field(default_factory=list)
    iterations: int = 0
    wall_time_seconds: float = 0.0
    converged: bool = False


@dataclass(frozen=True)
class EqtlCall:
    """One detected association between a SNP and a gene."""

    snp_index: int
    gene_index: int
    snp_id: str
    gene_id: str
    coefficient: float


def _rel_change(new, old):
    return abs(new - old) / max(abs(old), 1.0)


def _check_finite_objective(value, iteration):
    if not np.isfinite(value):
        raise NumericalError(f"objective became non-finite at iteration {iteration}")


def _init_state(ds):
    B = np.zeros((ds.p, ds.q))
    mu = ds.Y.mean(axis=0)
    L = np.zeros((ds.n, ds.q))
    return B, mu, L


def _lors_iteration(Y, Xf, B, mu, L, hp, opts):
    """One exact alternating iteration; returns fresh (B, mu, L)."""
    L_new = svt(Y - Xf @ B - mu[None, :], hp.lam)
    B_new = B.copy()
    mu_new = mu.copy()
    for j in range(Y.shape[1]):
        res = lasso_gene(
            Y[:, j],
            Xf,
            L_new[:, j],
            hp.rho,
            tol=opts.lasso_tol,
            max_sweeps=opts.lasso_max_sweeps,
            b0=B_new[:, j],
            mu0=mu_new[j],
        )
        B_new[:, j] = res.b
        mu_new[j] = res.mu
    return B_new, mu_new, L_new


def lors_solve(ds, hp, opts=None):
    """Alternating exact-minimization solver.  Returns (ModelFit, SolverTrace).

    Each iteration sets L to the singular-value-thresholded residual
    Y - X B - 1 mu and then refits every gene's (B_j, mu_j) by lasso,
    warm-started from the previous iterate.  The objective never increases
    across iterations.
    """
    opts = opts if opts is not None else SolverOptions()
    start = time.perf_counter()
    Xf = np.asfortranarray(ds.X)
    B, mu, L = _init_state(ds)
    obj = _objective_raw(ds.Y, ds.X, B, mu, L, hp.rho, hp.lam)
    _check_finite_objective(obj, 0)
    trace = SolverTrace(objective_values=[obj] if opts.record_trace else [])
    for it in range(1, opts.max_iter + 1):
        B, mu, L = _lors_iteration(ds.Y, Xf, B, mu, L, hp, opts)
        new_obj = _objective_raw(ds.Y, ds.X, B, mu, L, hp.rho, hp.lam)
        _check_finite_objective(new_obj, it)
        rel = _rel_change(new_obj, obj)
        obj = new_obj
        trace.iterations = it
        if opts.record_trace:
            trace.objective_values.append(new_obj)
            trace.rel_changes.append(rel)
            trace.step_kinds.append(STEP_FALLBACK)
        if rel < opts.rel_tol:
            trace.converged = True
            break
    trace.wall_time_seconds = time.perf_counter() - start
    return ModelFit(B=B, L=L, mu=mu), trace


def _backtrack_step(t0, g_old, inner, update, max_halvings=60):
    """Halve a block step until the quadratic-majorization decrease holds.

    update(t) must return (candidate, g_new, delta) where delta is the
    candidate minus the current block value and g_new the smooth loss at
    the candidate; inner(delta) is the inner product of the block gradient
    with delta.  Returns the accepted candidate.
    """
    t = t0
    for _ in range(max_halvings):
        cand, g_new, delta = update(t)
        bound = g_old + inner(delta) + float(np.sum(delta * delta)) / (2.0 * t)
        if g_new <= bound + 1e-12 * max(abs(g_old), 1.0):
            return cand
        t *= 0.5
    return cand


def fastlors_solve(ds, hp, opts=None):
    """Proximal-gradient solver with a monotone fallback.  Returns (ModelFit, SolverTrace).

    Block updates per iteration, with the residual refreshed between blocks:

        L  <- svt(L + tL * R, tL * lam)
        B  <- soft_threshold(B + tB * X'R, tB * rho)
        mu <- mu + tMu * colsum(R)

    where R = Y - X B - 1 mu - L.  With the fixed Lipschitz steps each
    block update cannot increase the objective; if an iteration still
    fails to strictly decrease it (e.g. at a fixed point), the iteration
    is redone with the exact alternating updates and logged as "fallback".
    """
    opts = opts if opts is not None else SolverOptions()
    start = time.perf_counter()
    Xf = np.asfortranarray(ds.X)
    Y = ds.Y
    tL, tB, tMu = lipschitz_steps(ds)
    backtracking = opts.step_policy == "backtracking"
    B, mu, L = _init_state(ds)
    R = Y - Xf @ B - mu[None, :] - L
    obj = _objective_raw(Y, ds.X, B, mu, L, hp.rho, hp.lam)
    _check_finite_objective(obj, 0)
    trace = SolverTrace(objective_values=[obj] if opts.record_trace else [])
    for it in range(1, opts.max_iter + 1):
        # valid snapshots: every block update below rebinds, never mutates
        B0, mu0, L0 = B, mu, L

        # L block: gradient is -R
        if backtracking:
            g_old = 0.5 * float(np.sum(R * R))

            def _update_l(t, L=L, R=R):
                cand = svt(L + t * R, t * hp.lam)
                delta = cand - L
                g_new = 0.5 * float(np.sum((R - delta) ** 2))
                return cand, g_new, delta

            L_new = _backtrack_step(2.0 * tL, g_old, lambda d: -float(np.sum(R * d)), _update_l)
        else:
            L_new = svt(L + tL * R, tL * hp.lam)
        R = R + (L - L_new)
        L = L_new

        # B block: gradient is -X'R
        gB = -(Xf.T @ R)
        if backtracking:
            g_old = 0.5 * float(np.sum(R * R))

            def _update_b(t, gB=gB, B=B, R=R):
                cand = soft_threshold(B - t * gB, t * hp.rho)
                delta = cand - B
                g_new = 0.5 * float(np.sum((R - Xf @ delta) ** 2))
                return cand, g_new, delta

            B_new = _backtrack_step(2.0 * tB, g_old, lambda d: float(np.sum(gB * d)), _update_b)
        else:
            B_new = soft_threshold(B - tB * gB, tB * hp.rho)
        R = R - Xf @ (B_new - B)
        B = B_new

        # mu block: gradient is -colsum(R); tMu = 1/n makes this the exact minimizer
        gMu = -R.sum(axis=0)
        mu_new = mu - tMu * gMu
        R = R - (mu_new - mu)[None, :]
        mu = mu_new

        new_obj = _objective_raw(Y, ds.X, B, mu, L, hp.rho, hp.lam)
        _check_finite_objective(new_obj, it)
        step_kind = STEP_PROXIMAL
        if not new_obj < obj:
            B, mu, L = _lors_iteration(Y, Xf, B0, mu0, L0, hp, opts)
            R = Y - Xf @ B - mu[None, :] - L
            new_obj = _objective_raw(Y, ds.X, B, mu, L, hp.rho, hp.lam)
            _check_finite_objective(new_obj, it)
            step_kind = STEP_FALLBACK
            if not new_obj < obj:
                # numerical fixed point: neither update improves, so keep
                # the pre-iteration state and let the zero change stop us
                B, mu, L = B0, mu0, L0
                R = Y - Xf @ B - mu[None, :] - L
                new_obj = obj
        rel = _rel_change(new_obj, obj)
        obj = new_obj
        trace.iterations = it
        if opts.record_trace:
            trace.objective_values.append(new_obj)
            trace.rel_changes.append(rel)
            trace.step_kinds.append(step_kind)
        if rel < opts.rel_tol:
            trace.converged = True
            break
    trace.wall_time_seconds = time.perf_counter() - start
    return ModelFit(B=B, L=L, mu=mu), trace


def detect_eqtls(fit, gene_ids, snp_ids):
    """List every nonzero B entry as an EqtlCall, by descending |coefficient|.

    Ties are broken by (snp_index, gene_index) so the order is deterministic.
    """
    rows, cols = np.nonzero(fit.B)
    coefs = fit.B[rows, cols]
    order = np.lexsort((cols, rows, -np.abs(coefs)))
    return [
        EqtlCall(
            snp_index=int(rows[i]),
            gene_index=int(cols[i]),
            snp_id=snp_ids[rows[i]],
            gene_id=gene_ids[cols[i]],
            coefficient=float(coefs[i]),
        )
        for i in order
    ]


def support_jaccard(B1, B2):
    """Jaccard similarity of the nonzero supports of two coefficient matrices."""
    s1 = B1 != 0
    s2 = B2 != 0
    union = int(np.sum(s1 | s2))
    if union == 0:
        return 1.0
    return float(np.sum(s1 & s2)) / union


SOLVERS = {"lors": lors_solve, "fastlors": fastlors_solve}
