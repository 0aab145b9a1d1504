"""Minorize-maximize driver.

Each iteration builds a concave minorant of the true objective that is tangent
at the current point, maximizes it, and repeats.  Because of tangency, the
minorant's value at the expansion point equals the true objective there, which
is what the trace records; the ascent property makes that trace non-decreasing.
A step whose recorded objective would dip below the previous one (possible only
within the subproblem solver's gap) is rejected and treated as convergence, so
traces are monotone by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .barrier import solve_concave
from .program import ConcaveProgram, SolverOptions
from .trace import TERM_CONVERGED, TERM_INFEASIBLE, TERM_ITERATION_CAP, SolveTrace


@dataclass(frozen=True)
class MmOptions:
    rel_tol: float = 1e-5
    max_iterations: int = 50
    subproblem: SolverOptions = SolverOptions()
    warm_t0: float = 1e3  # barrier restart parameter after the first iteration
    # Blend each warm start toward the first feasible point: subproblem optima
    # hug the boundary, and a slightly interior start re-centers much faster.
    warm_blend: float = 0.05


def mm_maximize(
    surrogate_builder: Callable[[np.ndarray], ConcaveProgram],
    initial_point: np.ndarray,
    options: MmOptions | None = None,
    interior_anchor: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveTrace]:
    """Maximize a (possibly non-concave) objective through tangent minorants.

    ``surrogate_builder`` maps the current point to a ConcaveProgram whose
    objective minorizes the true one with equality at that point.  Terminates on
    relative objective change <= rel_tol, the iteration cap, or an infeasible
    surrogate.  ``interior_anchor`` (a strictly feasible point, usually the
    initial one) speeds up warm starts by pulling each restart off the boundary.
    """
    options = options or MmOptions()
    trace = SolveTrace()
    x = np.asarray(initial_point, dtype=float).copy()
    anchor = None if interior_anchor is None else np.asarray(interior_anchor, dtype=float)
    prev_val: float | None = None
    sub_options = options.subproblem

    for it in range(options.max_iterations):
        program = surrogate_builder(x)
        if prev_val is None and not program.objective.in_domain(x):
            raise ValueError("initial point lies outside the surrogate objective domain")
        if it > 0 and anchor is not None:
            x_start = (1.0 - options.warm_blend) * x + options.warm_blend * anchor
        else:
            x_start = x
        x_new, sub_trace = solve_concave(program, sub_options, x0=x_start, fallback_x0=x)
        if sub_trace.termination == TERM_INFEASIBLE:
            trace.termination = TERM_INFEASIBLE
            trace.info["failed_iteration"] = it
            return x, trace
        if it > 0 and program.objective.value(x_new) < program.objective.value(x):
            # blended warm start undershot the tangency value; redo from x itself
            # so the ascent property is preserved
            x_retry, retry_trace = solve_concave(program, sub_options, x0=x)
            if retry_trace.termination != TERM_INFEASIBLE and (
                program.objective.value(x_retry) > program.objective.value(x_new)
            ):
                x_new = x_retry
        # Tangency: the next surrogate evaluated at x_new is the true objective.
        val = surrogate_builder(x_new).objective.value(x_new)
        if prev_val is not None and val < prev_val:
            trace.termination = TERM_CONVERGED  # within subproblem resolution
            break
        x = x_new
        trace.record(val, sub_trace.constraint_residuals[-1] if sub_trace.constraint_residuals else 0.0)
        if prev_val is not None and abs(val - prev_val) <= options.rel_tol * max(1.0, abs(val)):
            prev_val = val
            trace.termination = TERM_CONVERGED
            break
        prev_val = val
        # Later subproblems start near the previous optimum: skip the cold stages.
        sub_options = sub_options.with_(t0=max(sub_options.t0, options.warm_t0))
    else:
        trace.termination = TERM_ITERATION_CAP
    return x, trace
