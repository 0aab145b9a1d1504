"""Projected subgradient updates on named Lagrange multiplier families.

Multiplier vectors are keyed by constraint family (one array per family) and
every update is followed by projection onto the non-negative orthant.  Step
sizes follow the diminishing rule c / sqrt(i + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class DualState:
    multipliers: dict[str, np.ndarray]
    step_scales: dict[str, float]
    iteration: int = 0

    def __post_init__(self) -> None:
        for name, arr in self.multipliers.items():
            arr = np.asarray(arr, dtype=float)
            if np.any(arr < 0):
                raise ValueError(f"multiplier family {name!r} must be non-negative")
            self.multipliers[name] = arr
        for name, c in self.step_scales.items():
            if c <= 0:
                raise ValueError(f"step scale for {name!r} must be positive")

    def step_size(self, name: str) -> float:
        return self.step_scales[name] / np.sqrt(self.iteration + 1.0)

    def copy(self) -> "DualState":
        return DualState(
            multipliers={k: v.copy() for k, v in self.multipliers.items()},
            step_scales=dict(self.step_scales),
            iteration=self.iteration,
        )


def subgradient_step(state: DualState, violations: dict[str, np.ndarray]) -> DualState:
    """One projected step: m <- [m + alpha_family * violation]+ per family.

    Violations carry the sign convention of the constraint they price (positive
    means the priced constraint is pushed harder), so callers own the signs.
    """
    out = state.copy()
    for name, viol in violations.items():
        if name not in out.multipliers:
            raise KeyError(f"unknown multiplier family {name!r}")
        alpha = out.step_size(name)
        updated = out.multipliers[name] + alpha * np.asarray(viol, dtype=float)
        out.multipliers[name] = np.maximum(updated, 0.0)
    out.iteration = state.iteration + 1
    return out


def max_change(a: DualState, b: DualState) -> float:
    """Infinity norm of the multiplier change between two states."""
    return max(
        float(np.max(np.abs(a.multipliers[name] - b.multipliers[name]), initial=0.0))
        for name in a.multipliers
    )
