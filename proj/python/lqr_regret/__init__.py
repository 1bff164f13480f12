"""Regret of online, offline and linear controllers for stochastic LQR."""

from ._core import (
    ConcentrationStudy,
    ConvergenceRow,
    CostFormulas,
    DareOptions,
    DareSolution,
    LinearSearchResult,
    LqrError,
    MonteCarloSummary,
    NoiseModel,
    RegretReport,
    SystemSpec,
    closed_form_costs,
    closed_form_costs_W,
    concentration_study,
    convergence_study,
    cost_T,
    load_problem,
    offline_check,
    offline_qp,
    optimize_linear,
    regret_report,
    sample_noise,
    simulate,
    solve_dare,
    solve_dlyap,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
