"""Robust expectation bounds for a CIR bridge under drift misspecification."""

from __future__ import annotations

from .bounds import BoundResult, compute_bound, compute_F, invert_kappa, mean_curve, sweep_psi
from .calibration import (
    CountSeries,
    EmpiricalMoments,
    FitResult,
    empirical_moments,
    fit_constants,
    ingest,
    theoretical_moments,
)
from .core import (
    DEFAULT_PARAMS,
    BridgeParams,
    Case,
    Coefficient,
    TimeGrid,
    check_psi,
    eval_coeff,
    load_params,
    validate_params,
)
from .montecarlo import PathEnsemble, estimate_entropy, pinning_diagnostics, simulate
from .riccati import (
    RiccatiSolution,
    check_sufficient,
    feasible_interval,
    lemma1_feasible_interval,
    novikov_check,
    solve_A,
    solve_A_picard,
)

__version__ = "0.1.0"

__all__ = [
    "BoundResult", "compute_bound", "compute_F", "invert_kappa", "mean_curve", "sweep_psi",
    "CountSeries", "EmpiricalMoments", "FitResult", "empirical_moments", "fit_constants",
    "ingest", "theoretical_moments",
    "DEFAULT_PARAMS", "BridgeParams", "Case", "Coefficient", "TimeGrid", "check_psi",
    "eval_coeff", "load_params", "validate_params",
    "PathEnsemble", "estimate_entropy", "pinning_diagnostics", "simulate",
    "RiccatiSolution", "check_sufficient", "feasible_interval", "lemma1_feasible_interval", "novikov_check",
    "solve_A", "solve_A_picard",
]
