"""Command-line pipeline: ingest -> screen -> tune -> solve -> report.

Subcommands:

    run       full pipeline on expression/genotype TSVs
    bench     size sweep timing the two solvers' B-steps and whole solves
    simulate  write a synthetic TSV dataset with ground truth

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
failure.  Hitting the iteration cap is not a failure; it is flagged in
report.json.
"""

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from .bench import run_benchmark, write_bench_tsv
from .errors import DataError, NumericalError
from .io import RESULT_FILES, read_dataset, write_matrix_tsv, write_results
from .screening import hc_screening, lors_screening, no_screening, subset_dataset
from .simulate import SimScenario, simulate_dataset
from .solvers import SOLVERS, SolverOptions, detect_eqtls
from .tuning import build_grid, tune_no_cv, two_fold_cv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

METHODS = ("fastlors", "lors")
SCREENINGS = ("none", "lors", "hc")
LOCK_NAME = ".lorsmap.lock"


@dataclass
class RunConfig:
    expr: str
    geno: str
    out: str
    method: str = "fastlors"
    screening: str = "none"
    cross_valid: bool = True
    max_iter: int = 100
    rel_tol: float = 1e-4
    grid_rho: int = 5
    grid_lambda: int = 5
    seed: int = 0
    keep_per_gene: int | None = None
    hc_alpha0: float = 0.1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.screening not in SCREENINGS:
            raise ValueError(f"screening must be one of {SCREENINGS}, got {self.screening!r}")
        for name in ("expr", "geno", "out"):
            if not getattr(self, name):
                raise ValueError(f"{name} path must be nonempty")
        # delegate numeric validation
        SolverOptions(max_iter=self.max_iter, rel_tol=self.rel_tol)
        if self.grid_rho < 1 or self.grid_lambda < 1:
            raise ValueError("grid sizes must be at least 1")


class _OutputLock:
    """Exclusive ownership of an output directory for the duration of a run."""

    def __init__(self, out_dir):
        self.path = os.path.join(out_dir, LOCK_NAME)

    def __enter__(self):
        os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DataError(
                f"output directory is locked by another run; remove {self.path} if stale"
            ) from None
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            os.remove(self.path)
        except OSError:
            pass
        return False


def _remove_partial_outputs(out_dir):
    for name in RESULT_FILES:
        try:
            os.remove(os.path.join(out_dir, name))
        except OSError:
            pass


def run_pipeline(config):
    """Execute the pipeline described by a RunConfig; returns artifact paths.

    Stage wall-clock times (screening, tuning, joint modeling) are recorded
    separately in report.json.  On failure, partially written artifacts are
    removed before the exception propagates.
    """
    with _OutputLock(config.out):
        try:
            return _run_pipeline_locked(config)
        except Exception:
            _remove_partial_outputs(config.out)
            raise


def _run_pipeline_locked(config):
    total_start = time.perf_counter()
    ds = read_dataset(config.expr, config.geno)
    logger.info("loaded %d samples, %d genes, %d SNPs", ds.n, ds.q, ds.p)

    t0 = time.perf_counter()
    if config.screening == "lors":
        sr = lors_screening(ds, keep_per_gene=config.keep_per_gene)
    elif config.screening == "hc":
        sr = hc_screening(ds, alpha0=config.hc_alpha0, seed=config.seed)
    else:
        sr = no_screening(ds)
    ds_used = subset_dataset(ds, sr)
    screening_seconds = time.perf_counter() - t0
    logger.info("screening (%s) kept %d of %d SNPs", sr.method, ds_used.p, ds.p)

    t0 = time.perf_counter()
    opts = SolverOptions(max_iter=config.max_iter, rel_tol=config.rel_tol)
    grid = build_grid(ds_used, n_rho=config.grid_rho, n_lambda=config.grid_lambda)
    tune = two_fold_cv if config.cross_valid else tune_no_cv
    tuned = tune(ds_used, grid, seed=config.seed, opts=opts)
    hp = tuned.best
    tuning_seconds = time.perf_counter() - t0
    logger.info("selected rho=%.6g lambda=%.6g", hp.rho, hp.lam)

    t0 = time.perf_counter()
    fit, trace = SOLVERS[config.method](ds_used, hp, opts)
    modeling_seconds = time.perf_counter() - t0
    calls = detect_eqtls(fit, ds_used.gene_ids, ds_used.snp_ids)
    logger.info(
        "%s finished after %d iterations (converged=%s), %d eQTL calls",
        config.method, trace.iterations, trace.converged, len(calls),
    )

    timings = {
        "screening_seconds": screening_seconds,
        "tuning_seconds": tuning_seconds,
        "modeling_seconds": modeling_seconds,
        "total_seconds": time.perf_counter() - total_start,
    }
    report_config = asdict(config)
    report_config["selected_rho"] = hp.rho
    report_config["selected_lambda"] = hp.lam
    report_config["screening_kept"] = int(ds_used.p)
    return write_results(
        config.out, fit, calls, trace, timings, report_config,
        gene_ids=ds_used.gene_ids, snp_ids=ds_used.snp_ids, sample_ids=ds_used.sample_ids,
    )


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run the full pipeline on TSV inputs")
    p.add_argument("--expr", help="expression TSV (samples x genes)")
    p.add_argument("--geno", help="genotype TSV (samples x SNPs)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--method", choices=METHODS, default=None,
                   help="joint-modeling solver (default fastlors)")
    p.add_argument("--screening", choices=SCREENINGS, default=None,
                   help="pre-screening method (default none)")
    p.add_argument("--no-cross-valid", action="store_true",
                   help="tune by hidden-entry reconstruction instead of two-fold CV")
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap (default 100)")
    p.add_argument("--rel-tol", type=float, default=None,
                   help="relative objective-change stopping tolerance (default 1e-4)")
    p.add_argument("--grid-rho", type=int, default=None, help="rho grid size (default 5)")
    p.add_argument("--grid-lambda", type=int, default=None, help="lambda grid size (default 5)")
    p.add_argument("--seed", type=int, default=None, help="seed for tuning splits and screening")
    p.add_argument("--keep-per-gene", type=int, default=None,
                   help="SNPs kept per gene for marginal screening (default: sample count)")
    p.add_argument("--hc-alpha0", type=float, default=None,
                   help="p-value spectrum fraction scanned by HC screening (default 0.1)")
    p.add_argument("--config", help="JSON file with config values (e.g. a previous report.json)")


def _config_from_args(args):
    values = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"cannot parse config {args.config}: {exc}") from exc
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]
        known = set(RunConfig.__dataclass_fields__)
        values.update({k: v for k, v in loaded.items() if k in known})
    for name in ("expr", "geno", "out", "method", "screening", "max_iter", "rel_tol",
                 "grid_rho", "grid_lambda", "seed", "keep_per_gene", "hc_alpha0"):
        arg = getattr(args, name)
        if arg is not None:
            values[name] = arg
    if args.no_cross_valid:
        values["cross_valid"] = False
    missing = [k for k in ("expr", "geno", "out") if not values.get(k)]
    if missing:
        raise ValueError(f"missing required options: {', '.join('--' + m for m in missing)}")
    return RunConfig(**values)


def _cmd_run(args):
    config = _config_from_args(args)
    paths = run_pipeline(config)
    print(f"wrote {len(paths)} artifacts to {config.out}")
    return EXIT_OK


def _cmd_bench(args):
    try:
        sizes = [tuple(int(v) for v in spec.split("x")) for spec in args.sizes]
        if any(len(s) != 3 for s in sizes):
            raise ValueError
    except ValueError:
        raise ValueError(f"sizes must look like NxPxQ, e.g. 50x500x200; got {args.sizes}") from None
    opts = SolverOptions(max_iter=args.max_iter, rel_tol=args.rel_tol)
    rows = run_benchmark(
        sizes, seed=args.seed, reps=args.reps,
        include_solves=not args.steps_only, opts=opts,
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "bench.tsv")
    write_bench_tsv(path, rows)
    for r in rows:
        print(
            f"n={r.n} p={r.p} q={r.q}: lors B-step {r.lors_bstep_seconds:.4g}s, "
            f"fast B-step {r.fast_bstep_seconds:.4g}s, ratio {r.bstep_ratio:.3g}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_simulate(args):
    scenario = SimScenario(
        n=args.n, p=args.p, q=args.q, rank_L=args.rank, n_causal=args.causal,
        effect_size=args.effect, noise_sd=args.noise,
        maf_range=(args.maf_low, args.maf_high), seed=args.seed,
    )
    ds, truth = simulate_dataset(scenario)
    os.makedirs(args.out, exist_ok=True)
    expr = os.path.join(args.out, "expression.tsv")
    geno = os.path.join(args.out, "genotype.tsv")
    write_matrix_tsv(expr, ds.Y, ds.sample_ids, ds.gene_ids, corner="sample_id")
    write_matrix_tsv(geno, ds.X, ds.sample_ids, ds.snp_ids, corner="sample_id")
    write_matrix_tsv(os.path.join(args.out, "B_true.tsv"), truth.B_true,
                     ds.snp_ids, ds.gene_ids, corner="snp_id")
    write_matrix_tsv(os.path.join(args.out, "L_true.tsv"), truth.L_true,
                     ds.sample_ids, ds.gene_ids, corner="sample_id")
    with open(os.path.join(args.out, "mu_true.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gene_id\tmu\n")
        for gid, v in zip(ds.gene_ids, truth.mu_true):
            fh.write(f"{gid}\t{v:.17g}\n")
    with open(os.path.join(args.out, "causal_pairs.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snp_id\tgene_id\tcoefficient\n")
        for snp, gene in truth.causal_pairs:
            fh.write(f"{ds.snp_ids[snp]}\t{ds.gene_ids[gene]}\t{truth.B_true[snp, gene]:.17g}\n")
    with open(os.path.join(args.out, "scenario.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote simulated dataset ({ds.n} samples, {ds.q} genes, {ds.p} SNPs) to {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lorsmap",
        description="Joint sparse-plus-low-rank modeling for eQTL mapping.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_parser(sub)

    b = sub.add_parser("bench", help="time the solvers' B-steps and whole solves across sizes")
    b.add_argument("--sizes", nargs="+", default=["25x500x200", "50x500x200", "100x500x200"],
                   help="dataset sizes as NxPxQ")
    b.add_argument("--out", default="bench_out", help="output directory for bench.tsv")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--reps", type=int, default=5, help="repetitions per timed step (>= 5)")
    b.add_argument("--max-iter", type=int, default=50, help="iteration cap for whole-solve timings")
    b.add_argument("--rel-tol", type=float, default=1e-3, help="tolerance for whole-solve timings")
    b.add_argument("--steps-only", action="store_true", help="skip whole-solve timings")

    s = sub.add_parser("simulate", help="write a synthetic dataset with ground truth")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--n", type=int, default=50, help="samples")
    s.add_argument("--p", type=int, default=200, help="SNPs")
    s.add_argument("--q", type=int, default=100, help="genes")
    s.add_argument("--rank", type=int, default=3, help="rank of the hidden-factor matrix")
    s.add_argument("--causal", type=int, default=20, help="number of nonzero effects")
    s.add_argument("--effect", type=float, default=1.0, help="effect magnitude")
    s.add_argument("--noise", type=float, default=0.5, help="noise standard deviation")
    s.add_argument("--maf-low", type=float, default=0.05)
    s.add_argument("--maf-high", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _cmd_run, "bench": _cmd_bench, "simulate": _cmd_simulate}
    try:
        return handlers[args.command](args)
    except (DataError, OSError) as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
