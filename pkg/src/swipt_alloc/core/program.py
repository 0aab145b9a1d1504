"""Concave program container and solver options."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .expr import ConcaveExpr


@dataclass
class ConcaveProgram:
    """maximize objective(x) subject to
        a_ub @ x <= b_ub,
        a_eq @ x == b_eq,
        g_i(x) >= bound_i   for (g_i, bound_i) in concave_ineqs,
        lb <= x <= ub.

    The objective and every g_i must be concave on the feasible set (caller's
    contract); nonemptiness is established by the solver's phase-1 pass.
    """

    n: int
    objective: ConcaveExpr
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    concave_ineqs: list[tuple[ConcaveExpr, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.a_ub is not None:
            self.a_ub = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
            self.b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
            if self.a_ub.shape != (self.b_ub.size, self.n):
                raise ValueError("a_ub/b_ub shape mismatch")
        if self.a_eq is not None:
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
            self.b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        self.lb = np.full(self.n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(self.n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if np.any(self.lb > self.ub):
            raise ValueError("box bounds must satisfy lb <= ub")

    @property
    def inequality_count(self) -> int:
        m = 0 if self.a_ub is None else self.a_ub.shape[0]
        m += int(np.isfinite(self.lb).sum()) + int(np.isfinite(self.ub).sum())
        m += len(self.concave_ineqs)
        return m

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint violation at x (0 when feasible)."""
        v = 0.0
        if self.a_ub is not None:
            v = max(v, float(np.max(self.a_ub @ x - self.b_ub, initial=0.0)))
        if self.a_eq is not None:
            v = max(v, float(np.max(np.abs(self.a_eq @ x - self.b_eq), initial=0.0)))
        v = max(v, float(np.max(self.lb - x, initial=0.0)))
        v = max(v, float(np.max(x - self.ub, initial=0.0)))
        for g, bound in self.concave_ineqs:
            v = max(v, bound - g.value(x))
        return v


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    t0: float = 1.0  # initial barrier parameter (cold starts)
    # With a strictly feasible caller-supplied start the early stages would
    # only drag the point to the analytic center and back; skip them.
    warm_t0: float = 1e6
    barrier_step: float = 10.0  # multiplicative t update per outer stage
    max_stages: int = 40
    max_newton_per_stage: int = 60
    objective_ceiling: float = 1e12
    ridge: float = 1e-11

    def with_(self, **kw) -> "SolverOptions":
        return replace(self, **kw)


DEFAULT_OPTIONS = SolverOptions()
