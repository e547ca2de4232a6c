"""Timing harness comparing the two solvers' B-steps and whole solves.

The B-step is where the methods differ in cost: the alternating solver runs
one lasso to convergence per gene, while the proximal solver's B update is
a single gradient-plus-threshold evaluation.  Both are timed from the same
fixed state (B = 0, mu = column means, L from one threshold step), so per
repetition each method performs identical work and only the clock varies.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from .lasso import lasso_gene
from .model import Hyperparams, lipschitz_steps
from .prox import svt
from .simulate import SimScenario, simulate_dataset
from .solvers import SolverOptions, fastlors_solve, lors_solve
from .tuning import penalty_ceilings

logger = logging.getLogger(__name__)

# fraction of the full-shrinkage penalty ceilings used for benchmark fits
BENCH_PENALTY_FRACTION = 0.1
TIMER_RESOLUTION_FLOOR = 1e-3


@dataclass
class BenchRow:
    n: int
    p: int
    q: int
    reps: int
    rho: float
    lam: float
    lors_bstep_seconds: float
    fast_bstep_seconds: float
    bstep_ratio: float
    lors_solve_seconds: float = float("nan")
    lors_iterations: int = 0
    fast_solve_seconds: float = float("nan")
    fast_iterations: int = 0


def bench_hyperparams(ds, fraction=BENCH_PENALTY_FRACTION):
    rho_max, lam_max = penalty_ceilings(ds)
    return Hyperparams(rho=fraction * rho_max, lam=fraction * lam_max)


def _bench_state(ds, hp):
    """State just before the first B-step: B = 0, mu = column means, L thresholded."""
    B = np.zeros((ds.p, ds.q))
    mu = ds.Y.mean(axis=0)
    L = svt(ds.Y - mu[None, :], hp.lam)
    return B, mu, L


# single measured batches shorter than this are inner-looped up to it, so a
# sub-millisecond step never rides on timer resolution or scheduler stalls
_TARGET_BATCH_SECONDS = 0.05


def _lors_bstep(ds, Xf, hp, L, mu, opts):
    for j in range(ds.q):
        lasso_gene(
            ds.Y[:, j], Xf, L[:, j], hp.rho,
            tol=opts.lasso_tol, max_sweeps=opts.lasso_max_sweeps, mu0=mu[j],
        )


class _FastBstepKernel:
    """One proximal B update with preallocated work buffers.

    Identical arithmetic to the solver's B block; buffers keep repeated
    timing runs off the allocator, whose large-block behavior is wildly
    state-dependent and would otherwise dominate the measurement.
    """

    def __init__(self, ds, tB, hp, B, L, mu):
        self.ds, self.tB, self.rho = ds, tB, hp.rho
        self.B, self.L, self.mu = B, L, mu
        self.R = np.empty((ds.n, ds.q))
        self.G = np.empty((ds.p, ds.q))
        self.W = np.empty((ds.p, ds.q))

    def __call__(self):
        ds, R, G, W = self.ds, self.R, self.G, self.W
        np.matmul(ds.X, self.B, out=R)
        np.subtract(ds.Y, R, out=R)
        R -= self.L
        R -= self.mu[None, :]
        np.matmul(ds.X.T, R, out=G)          # -gB
        np.multiply(G, self.tB, out=G)
        np.add(self.B, G, out=W)             # B - tB * gB
        tau = self.tB * self.rho
        np.sign(W, out=G)
        np.abs(W, out=W)
        W -= tau
        np.maximum(W, 0.0, out=W)
        W *= G                               # soft threshold, in place


def _timed(step, inner):
    t0 = time.perf_counter()
    for _ in range(inner):
        step()
    return (time.perf_counter() - t0) / inner


# batches dropped from the slow end before averaging: scheduler interference
# only ever adds time, so trimming from above is unbiased
_TRIMMED_BATCHES = 2


class BstepTimer:
    """Repeatable timing of both methods' B-steps from the common state.

    Construction runs each method once unrecorded (JIT compilation, caches)
    and sizes an inner batch so no timed measurement is shorter than ~20 ms.
    Each measure() call times one fast batch then one lors batch, so
    machine-wide slowdowns hit both methods alike; means() drops the
    slowest batches before averaging.
    """

    def __init__(self, ds, hp, opts=None):
        opts = opts if opts is not None else SolverOptions()
        B, mu, L = _bench_state(ds, hp)
        Xf = np.asfortranarray(ds.X)
        _, tB, _ = lipschitz_steps(ds)
        self._lors = lambda: _lors_bstep(ds, Xf, hp, L, mu, opts)
        self._fast = _FastBstepKernel(ds, tB, hp, B, L, mu)
        self._inner = {}
        for name, step in (("fast", self._fast), ("lors", self._lors)):
            step()
            est = max(_timed(step, 1), 1e-9)
            if est < TIMER_RESOLUTION_FLOOR:
                logger.warning(
                    "%s B-step takes %.2g s (< %.0f ms); batching repetitions to compensate",
                    name, est, TIMER_RESOLUTION_FLOOR * 1e3,
                )
            self._inner[name] = max(1, int(np.ceil(_TARGET_BATCH_SECONDS / est)))
        self.fast_times = []
        self.lors_times = []

    def measure(self):
        self.fast_times.append(_timed(self._fast, self._inner["fast"]))
        self.lors_times.append(_timed(self._lors, self._inner["lors"]))

    def means(self):
        """Trimmed-mean (lors_seconds, fast_seconds) over the measured batches."""
        keep = max(1, len(self.lors_times) - _TRIMMED_BATCHES)
        lors = float(np.mean(np.sort(self.lors_times)[:keep]))
        fast = float(np.mean(np.sort(self.fast_times)[:keep]))
        return lors, fast


def time_bsteps(ds, hp, reps=5, opts=None):
    """Mean wall time of one full B-step per method from the common state.

    Returns (lors_mean_seconds, fast_mean_seconds) averaged over reps
    batches after trimming; see BstepTimer.
    """
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    timer = BstepTimer(ds, hp, opts)
    for _ in range(reps + _TRIMMED_BATCHES):
        timer.measure()
    return timer.means()


def bench_dataset(n, p, q, seed=0):
    """The simulated dataset used for one benchmark size."""
    scenario = SimScenario(
        n=n, p=p, q=q,
        rank_L=min(3, min(n, q)),
        n_causal=min(max(10, p // 20), p * q),
        effect_size=1.0, noise_sd=0.5, seed=seed,
    )
    ds, _ = simulate_dataset(scenario)
    return ds


def run_benchmark(sizes, seed=0, reps=5, include_solves=True, opts=None,
                  penalty_fraction=BENCH_PENALTY_FRACTION):
    """Benchmark each (n, p, q) size; returns a list of BenchRow.

    B-step batches are measured round-robin across all sizes so a transient
    machine slowdown lands in the same measurement round everywhere and is
    trimmed out consistently.  Iteration counts in the rows are
    deterministic for a fixed seed; timings of course are not.
    """
    opts = opts if opts is not None else SolverOptions(max_iter=50, rel_tol=1e-3)
    datasets = [bench_dataset(n, p, q, seed) for n, p, q in sizes]
    hps = [bench_hyperparams(ds, penalty_fraction) for ds in datasets]
    timers = [BstepTimer(ds, hp, opts) for ds, hp in zip(datasets, hps)]
    for _ in range(reps + _TRIMMED_BATCHES):
        for timer in timers:
            timer.measure()
    rows = []
    for (n, p, q), ds, hp, timer in zip(sizes, datasets, hps, timers):
        lors_t, fast_t = timer.means()
        row = BenchRow(
            n=n, p=p, q=q, reps=reps, rho=hp.rho, lam=hp.lam,
            lors_bstep_seconds=lors_t, fast_bstep_seconds=fast_t,
            bstep_ratio=lors_t / fast_t if fast_t > 0 else float("inf"),
        )
        if include_solves:
            t0 = time.perf_counter()
            _, tr = lors_solve(ds, hp, opts)
            row.lors_solve_seconds = time.perf_counter() - t0
            row.lors_iterations = tr.iterations
            t0 = time.perf_counter()
            _, tr = fastlors_solve(ds, hp, opts)
            row.fast_solve_seconds = time.perf_counter() - t0
            row.fast_iterations = tr.iterations
        rows.append(row)
    return rows


def write_bench_tsv(path, rows):
    """Write benchmark rows as bench.tsv."""
    cols = [
        "n", "p", "q", "reps", "rho", "lambda",
        "lors_bstep_seconds", "fast_bstep_seconds", "bstep_ratio",
        "lors_solve_seconds", "lors_iterations", "fast_solve_seconds", "fast_iterations",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(cols) + "\n")
        for r in rows:
            fh.write(
                "\t".join([
                    str(r.n), str(r.p), str(r.q), str(r.reps),
                    f"{r.rho:.17g}", f"{r.lam:.17g}",
                    f"{r.lors_bstep_seconds:.6g}", f"{r.fast_bstep_seconds:.6g}",
                    f"{r.bstep_ratio:.6g}",
                    f"{r.lors_solve_seconds:.6g}", str(r.lors_iterations),
                    f"{r.fast_solve_seconds:.6g}", str(r.fast_iterations),
                ]) + "\n"
            )
