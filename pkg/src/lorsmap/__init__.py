"""Joint sparse-plus-low-rank modeling for eQTL mapping.

Fits gene expression as sparse SNP effects plus a low-rank hidden-factor
matrix, with two interchangeable solvers (alternating exact minimization
and proximal gradient), pre-screening, cross-validated penalty tuning, a
ground-truth simulator and a benchmarking CLI.
"""

__version__ = "0.1.0"

from .model import EqtlDataset, Hyperparams, ModelFit, grad_smooth, lipschitz_steps, objective, residual
from .prox import l1_norm, nuclear_norm, soft_threshold, svt
from .lasso import LassoResult, lasso_gene
from .solvers import (
    EqtlCall,
    SolverOptions,
    SolverTrace,
    detect_eqtls,
    fastlors_solve,
    lors_solve,
    support_jaccard,
)
from .screening import ScreeningResult, hc_screening, lors_screening, no_screening, subset_dataset
from .simulate import SimScenario, SimTruth, simulate_dataset
from .tuning import TuningGrid, TuningResult, build_grid, penalty_ceilings, tune_no_cv, two_fold_cv
from .io import read_dataset, write_results
from .errors import DataError, LorsError, NumericalError

__all__ = [
    "EqtlCall",
    "EqtlDataset",
    "DataError",
    "Hyperparams",
    "LassoResult",
    "LorsError",
    "ModelFit",
    "NumericalError",
    "ScreeningResult",
    "SimScenario",
    "SimTruth",
    "SolverOptions",
    "SolverTrace",
    "TuningGrid",
    "TuningResult",
    "build_grid",
    "detect_eqtls",
    "fastlors_solve",
    "grad_smooth",
    "hc_screening",
    "l1_norm",
    "lasso_gene",
    "lipschitz_steps",
    "lors_screening",
    "lors_solve",
    "no_screening",
    "nuclear_norm",
    "objective",
    "penalty_ceilings",
    "read_dataset",
    "residual",
    "simulate_dataset",
    "soft_threshold",
    "subset_dataset",
    "support_jaccard",
    "svt",
    "tune_no_cv",
    "two_fold_cv",
    "write_results",
]
