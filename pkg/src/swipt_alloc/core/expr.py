"""Structured concave expressions: const + c'x + x'Qx/2 + sum_i w_i*ln(C_i x + d_i).

Every objective and nonlinear constraint in the package is a sum of linear terms
and logs of affine functions (Shannon rates, their Taylor minorants, harvested
power), so carrying the structure explicitly gives exact gradients and Hessians
for Newton steps without autodiff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LN2 = float(np.log(2.0))


@dataclass
class ConcaveExpr:
    n: int
    const: float = 0.0
    lin: np.ndarray | None = None  # (n,)
    quad: np.ndarray | None = None  # (n, n), negative semidefinite
    log_w: np.ndarray | None = None  # (r,) positive weights
    log_c: np.ndarray | None = None  # (r, n)
    log_d: np.ndarray | None = None  # (r,)

    def __post_init__(self) -> None:
        if self.lin is not None:
            self.lin = np.asarray(self.lin, dtype=float)
        if self.quad is not None:
            self.quad = np.asarray(self.quad, dtype=float)
        if self.log_w is not None:
            self.log_w = np.asarray(self.log_w, dtype=float)
            self.log_c = np.asarray(self.log_c, dtype=float)
            self.log_d = np.asarray(self.log_d, dtype=float)
            if np.any(self.log_w < 0):
                raise ValueError("log weights must be non-negative for concavity")

    # -- evaluation ---------------------------------------------------------

    def _log_args(self, x: np.ndarray) -> np.ndarray | None:
        if self.log_w is None:
            return None
        return self.log_c @ x + self.log_d

    def in_domain(self, x: np.ndarray) -> bool:
        args = self._log_args(x)
        return args is None or bool(np.all(args > 0))

    def value(self, x: np.ndarray) -> float:
        v = self.const
        if self.lin is not None:
            v += float(self.lin @ x)
        if self.quad is not None:
            v += 0.5 * float(x @ self.quad @ x)
        args = self._log_args(x)
        if args is not None:
            if np.any(args <= 0):
                return -np.inf
            v += float(self.log_w @ np.log(args))
        return v

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.n)
        if self.lin is not None:
            g += self.lin
        if self.quad is not None:
            g += self.quad @ x
        args = self._log_args(x)
        if args is not None:
            g += self.log_c.T @ (self.log_w / args)
        return g

    def hess(self, x: np.ndarray) -> np.ndarray:
        h = np.zeros((self.n, self.n))
        if self.quad is not None:
            h += self.quad
        args = self._log_args(x)
        if args is not None:
            scaled = self.log_c * (np.sqrt(self.log_w) / args)[:, None]
            h -= scaled.T @ scaled
        return h

    # -- construction helpers ----------------------------------------------

    @staticmethod
    def linear(n: int, lin: np.ndarray, const: float = 0.0) -> "ConcaveExpr":
        return ConcaveExpr(n=n, const=const, lin=np.asarray(lin, dtype=float))

    @staticmethod
    def log_sum(n: int, w: np.ndarray, c: np.ndarray, d: np.ndarray,
                lin: np.ndarray | None = None, const: float = 0.0) -> "ConcaveExpr":
        return ConcaveExpr(n=n, const=const, lin=lin, log_w=w, log_c=c, log_d=d)


def taylor_underestimator(f_value: float, f_gradient: np.ndarray, expansion_point: np.ndarray):
    """Affine global underestimator of a convex differentiable f at x0:
    g(x) = f(x0) + grad'(x - x0), with exact tangency g(x0) = f(x0).

    Returns (callable g, lin, const) so callers can embed the coefficients
    directly into surrogate objectives.
    """
    grad = np.asarray(f_gradient, dtype=float)
    x0 = np.asarray(expansion_point, dtype=float)
    const = float(f_value - grad @ x0)

    def g(x: np.ndarray) -> float:
        return const + float(grad @ np.asarray(x, dtype=float))

    return g, grad, const
