"""Binary-recovery machinery: the a - a^2 penalty and big-M product checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float  # penalty weight, >= 0
    binary_tolerance: float = 1e-4

    def __post_init__(self) -> None:
        if not np.isfinite(self.lam):
            raise ValueError("penalty weight must be finite")
        if not (0.0 < self.binary_tolerance < 0.5):
            raise ValueError("binaryTolerance must lie in (0, 0.5)")


def penalty_value(a: np.ndarray, lam: float) -> float:
    """lam * sum(a - a^2): non-negative on [0,1], zero iff every entry is binary."""
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("indicator values must lie in [0, 1]")
    return float(lam * np.sum(a - a * a))


def binary_gap(a: np.ndarray) -> float:
    """max |a (1 - a)|: distance-from-binary measure used for convergence."""
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a * (1.0 - a)), initial=0.0))


def linearized_penalty(a0: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Coefficients of -lam*(V(a) - W~(a)) with W~ the tangent of sum(a^2) at a0.

    Returns (lin, const) such that the penalty contribution to a surrogate
    objective is lin @ a + const; at a = a0 it equals -penalty_value(a0, lam).
    """
    a0 = np.asarray(a0, dtype=float)
    lin = -lam * (1.0 - 2.0 * a0)
    const = -float(lam * np.sum(a0 * a0))
    return lin, const


@dataclass(frozen=True)
class BigMReport:
    feasible: bool
    max_violation: float
    worst_constraint: str


def big_m_feasible(
    a: np.ndarray,
    p: np.ndarray,
    p_tilde: np.ndarray,
    p_max: float,
    tol: float = 1e-9,
) -> BigMReport:
    """Check the four product-decoupling relations elementwise within tol:
    p~ <= p_max * a,  p~ <= p,  p~ >= p - (1 - a) * p_max,  p~ >= 0.
    """
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    pt = np.asarray(p_tilde, dtype=float)
    checks = {
        "p~ <= p_max*a": pt - p_max * a,
        "p~ <= p": pt - p,
        "p~ >= p - (1-a)p_max": (p - (1.0 - a) * p_max) - pt,
        "p~ >= 0": -pt,
    }
    worst_name = ""
    worst = -np.inf
    for name, viol in checks.items():
        v = float(np.max(viol, initial=-np.inf))
        if v > worst:
            worst, worst_name = v, name
    return BigMReport(feasible=worst <= tol, max_violation=max(worst, 0.0), worst_constraint=worst_name)


def round_binary(a: np.ndarray, axis: int | None = None) -> np.ndarray:
    """Round a relaxed indicator tensor to {0,1}.

    With ``axis`` given, at most the largest entry along that axis is kept per
    slice (largest-a-wins, lowest index on ties), and only if it rounds up.
    Without an axis, plain elementwise rounding at 0.5.
    """
    a = np.asarray(a, dtype=float)
    if axis is None:
        return (a >= 0.5).astype(float)
    out = np.zeros_like(a)
    winner = np.argmax(a, axis=axis)  # argmax takes the lowest index on ties
    idx = list(np.indices(winner.shape))
    idx.insert(axis if axis >= 0 else a.ndim + axis, winner)
    keep = np.take_along_axis(a, np.expand_dims(winner, axis), axis=axis).squeeze(axis) >= 0.5
    out[tuple(idx)] = np.where(keep, 1.0, 0.0)
    return out
