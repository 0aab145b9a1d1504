"""Dinkelbach iteration for maximizing a ratio N(z) / D(z) with D > 0.

The parametric subproblem max N(z) - lam * D(z) is delegated to the caller;
its optimal value hits zero exactly at the optimal ratio, and the lam updates
lam <- N(z)/D(z) form a non-decreasing sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .trace import TERM_CONVERGED, TERM_ITERATION_CAP, SolveTrace


@dataclass(frozen=True)
class DinkelbachOptions:
    tol: float = 1e-6
    max_iterations: int = 30
    initial_ratio: float = 0.0  # first subproblem maximizes N alone


def dinkelbach_maximize(
    parametric_solver: Callable[[float], object],
    evaluate: Callable[[object], tuple[float, float]],
    options: DinkelbachOptions | None = None,
) -> tuple[float, object, SolveTrace]:
    """Returns (ratio, point, trace).

    ``parametric_solver(lam)`` maximizes N(z) - lam * D(z); ``evaluate(z)``
    returns (N(z), D(z)).  Terminates when |N - lam * D| <= tol * max(1, D).
    The trace records the ratio after each subproblem solve.
    """
    options = options or DinkelbachOptions()
    trace = SolveTrace()
    lam = options.initial_ratio
    point = None
    for _ in range(options.max_iterations):
        point = parametric_solver(lam)
        num, den = evaluate(point)
        if den <= 0:
            raise ValueError(f"denominator must stay positive; got {den!r} at the current point")
        residual = num - lam * den
        lam_next = num / den
        trace.record(lam_next, abs(residual))
        if abs(residual) <= options.tol * max(1.0, den):
            lam = lam_next
            trace.termination = TERM_CONVERGED
            trace.info["root_residual"] = abs(residual)
            return lam, point, trace
        lam = lam_next
    trace.termination = TERM_ITERATION_CAP
    return lam, point, trace
