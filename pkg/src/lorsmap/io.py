"""TSV ingestion and result writing.

Input matrices are tab-separated with a header row of column labels and a
first column of row labels; samples are rows.  Expression and genotype
files are aligned on their shared sample labels, keeping the expression
file's order.  Genotype cells may be missing (NA, -9 or empty) and are
mean-imputed per SNP; missing expression values are an error.

All outputs are UTF-8 with Unix newlines, and floats are written with 17
significant digits so re-reading reproduces them exactly.
"""

import csv
import json
import logging
import os

import numpy as np

from .errors import DataError
from .model import EqtlDataset

logger = logging.getLogger(__name__)

GENO_MISSING_TOKENS = {"NA", "na", "NaN", "nan", "-9", ""}
EXPR_MISSING_TOKENS = {"NA", "na", "NaN", "nan", ""}

RESULT_FILES = ("eqtls.tsv", "B.tsv", "L.tsv", "mu.tsv", "trace.tsv", "report.json")


def _fmt(x):
    return f"{x:.17g}"


def read_matrix_tsv(path, missing_tokens=frozenset()):
    """Parse a labeled TSV matrix; missing tokens become NaN.

    Returns (row_labels, col_labels, values).  Raises DataError with
    file/line diagnostics for ragged rows, non-numeric cells, or duplicate
    row labels.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        col_labels = [c.strip() for c in header[1:]]
        if not col_labels:
            raise DataError(f"{path}:1: header has no data columns")
        width = len(header)
        row_labels = []
        rows = []
        seen = set()
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != width:
                raise DataError(
                    f"{path}:{lineno}: expected {width} columns, found {len(cells)}"
                )
            label = cells[0].strip()
            if label in seen:
                raise DataError(f"{path}:{lineno}: duplicate row label {label!r}")
            seen.add(label)
            row = np.empty(width - 1)
            for j, cell in enumerate(cells[1:]):
                token = cell.strip()
                if token in missing_tokens:
                    row[j] = np.nan
                else:
                    try:
                        row[j] = float(token)
                    except ValueError:
                        raise DataError(
                            f"{path}:{lineno}: column {col_labels[j]!r}: "
                            f"non-numeric value {cell!r}"
                        ) from None
            row_labels.append(label)
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return row_labels, col_labels, np.vstack(rows)


def read_dataset(expr_path, geno_path):
    """Load expression and genotype TSVs into an aligned EqtlDataset."""
    expr_samples, gene_ids, Y = read_matrix_tsv(expr_path, EXPR_MISSING_TOKENS)
    geno_samples, snp_ids, X = read_matrix_tsv(geno_path, GENO_MISSING_TOKENS)

    bad = np.argwhere(np.isnan(Y))
    if bad.size:
        i, j = bad[0]
        raise DataError(
            f"{expr_path}: missing expression value for sample {expr_samples[i]!r}, "
            f"gene {gene_ids[j]!r}; expression values may not be missing"
        )

    geno_index = {s: i for i, s in enumerate(geno_samples)}
    shared = [s for s in expr_samples if s in geno_index]
    if not shared:
        raise DataError(
            f"no overlapping samples between {expr_path} and {geno_path}"
        )
    if len(shared) < max(len(expr_samples), len(geno_samples)):
        logger.warning(
            "sample intersection keeps %d of %d expression / %d genotype samples",
            len(shared), len(expr_samples), len(geno_samples),
        )
    expr_index = {s: i for i, s in enumerate(expr_samples)}
    Y = Y[[expr_index[s] for s in shared], :]
    X = X[[geno_index[s] for s in shared], :]

    for k in range(X.shape[1]):
        col = X[:, k]
        missing = np.isnan(col)
        if missing.any():
            observed = col[~missing]
            if observed.size == 0:
                raise DataError(
                    f"{geno_path}: SNP {snp_ids[k]!r} has no observed genotypes to impute from"
                )
            col[missing] = observed.mean()

    try:
        return EqtlDataset(Y=Y, X=X, gene_ids=gene_ids, snp_ids=snp_ids, sample_ids=shared)
    except ValueError as exc:
        raise DataError(f"invalid dataset from {expr_path} and {geno_path}: {exc}") from exc


def write_matrix_tsv(path, values, row_labels, col_labels, corner=""):
    """Write a labeled matrix TSV with round-trip float formatting."""
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join([corner, *col_labels]) + "\n")
        for label, row in zip(row_labels, values):
            fh.write(label + "\t" + "\t".join(_fmt(v) for v in row) + "\n")


def write_results(out_dir, fit, calls, trace, timings, config,
                  gene_ids=None, snp_ids=None, sample_ids=None):
    """Write the fitted model, eQTL calls, trace and run report into out_dir.

    Produces eqtls.tsv (calls by descending |coefficient|), B.tsv, L.tsv,
    mu.tsv, trace.tsv (iteration 0 is the initial objective) and
    report.json.  Returns a dict mapping artifact names to paths.
    """
    p, q = fit.B.shape
    n = fit.L.shape[0]
    gene_ids = gene_ids if gene_ids is not None else [f"gene{j + 1}" for j in range(q)]
    snp_ids = snp_ids if snp_ids is not None else [f"snp{k + 1}" for k in range(p)]
    sample_ids = sample_ids if sample_ids is not None else [f"sample{i + 1}" for i in range(n)]
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in RESULT_FILES}

    with open(paths["eqtls.tsv"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snp_id\tgene_id\tcoefficient\n")
        for call in calls:
            fh.write(f"{call.snp_id}\t{call.gene_id}\t{_fmt(call.coefficient)}\n")

    write_matrix_tsv(paths["B.tsv"], fit.B, snp_ids, gene_ids, corner="snp_id")
    write_matrix_tsv(paths["L.tsv"], fit.L, sample_ids, gene_ids, corner="sample_id")
    with open(paths["mu.tsv"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gene_id\tmu\n")
        for gid, v in zip(gene_ids, fit.mu):
            fh.write(f"{gid}\t{_fmt(v)}\n")

    with open(paths["trace.tsv"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration\tobjective\trel_change\tstep_kind\n")
        if trace.objective_values:
            fh.write(f"0\t{_fmt(trace.objective_values[0])}\tNA\tinit\n")
            for it, (obj, rel, kind) in enumerate(
                zip(trace.objective_values[1:], trace.rel_changes, trace.step_kinds), start=1
            ):
                fh.write(f"{it}\t{_fmt(obj)}\t{_fmt(rel)}\t{kind}\n")

    from . import __version__

    report = {
        "version": __version__,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "timings": dict(timings),
        "config": dict(config),
    }
    with open(paths["report.json"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
