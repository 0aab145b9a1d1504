"""Shared optimization machinery: concave programs, MM, Dinkelbach, duals."""

from .barrier import kkt_residuals, solve_concave
from .binary import (
    BigMReport,
    PenaltyConfig,
    big_m_feasible,
    binary_gap,
    linearized_penalty,
    penalty_value,
    round_binary,
)
from .duals import DualState, max_change, subgradient_step
from .expr import LN2, ConcaveExpr, taylor_underestimator
from .fractional import DinkelbachOptions, dinkelbach_maximize
from .mm import MmOptions, mm_maximize
from .program import DEFAULT_OPTIONS, ConcaveProgram, SolverOptions
from .trace import (
    TERM_CONVERGED,
    TERM_INFEASIBLE,
    TERM_ITERATION_CAP,
    TERM_UNBOUNDED,
    SolveTrace,
)

__all__ = [
    "LN2",
    "ConcaveExpr",
    "ConcaveProgram",
    "SolverOptions",
    "DEFAULT_OPTIONS",
    "SolveTrace",
    "TERM_CONVERGED",
    "TERM_INFEASIBLE",
    "TERM_ITERATION_CAP",
    "TERM_UNBOUNDED",
    "solve_concave",
    "kkt_residuals",
    "taylor_underestimator",
    "MmOptions",
    "mm_maximize",
    "DinkelbachOptions",
    "dinkelbach_maximize",
    "DualState",
    "subgradient_step",
    "max_change",
    "PenaltyConfig",
    "penalty_value",
    "binary_gap",
    "linearized_penalty",
    "big_m_feasible",
    "BigMReport",
    "round_binary",
]
