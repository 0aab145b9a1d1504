"""Per-iteration bookkeeping shared by every iterative solver."""

from __future__ import annotations

from dataclasses import dataclass, field

TERM_CONVERGED = "converged"
TERM_ITERATION_CAP = "iteration-cap"
TERM_INFEASIBLE = "infeasible"
TERM_UNBOUNDED = "unbounded"


@dataclass
class SolveTrace:
    objective_values: list[float] = field(default_factory=list)
    constraint_residuals: list[float] = field(default_factory=list)
    termination: str = TERM_ITERATION_CAP
    # Free-form diagnostics (kkt residuals, warning flags, ...).
    info: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.objective_values)

    def record(self, objective: float, residual: float = 0.0) -> None:
        self.objective_values.append(float(objective))
        self.constraint_residuals.append(float(residual))

    def is_monotone(self, slack: float = 1e-9) -> bool:
        vals = self.objective_values
        return all(vals[i + 1] >= vals[i] - slack for i in range(len(vals) - 1))

    def csv_rows(self) -> list[tuple[int, float, float]]:
        """(iteration, objective, maxResidual) rows for the harness."""
        return [
            (i, obj, res)
            for i, (obj, res) in enumerate(zip(self.objective_values, self.constraint_residuals))
        ]
